"""The engine's 11 topic labels, in stable code order.

These titles are part of the bridge wire contract: the handshake advertises
them and every response carries one of them verbatim.
"""

LABELS = [
    "Operations / Delays / Procedures",
    "SmarTrip Card / Fares",
    "Customer Service",
    "Cleanliness / Maintenance",
    "Information Provision",
    "Unsafe Driving",
    "General",
    "Route Suggestions",
    "Fare Evasion",
    "Crowding",
    "Crime / Harassment / Security",
]

LABEL_INDEX = {title: i for i, title in enumerate(LABELS)}


class LabelMismatchError(Exception):
    """A training file carries a label outside the engine's label set."""

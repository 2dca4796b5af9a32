"""The 11 broad transit feedback topics and their stable integer codes."""

from __future__ import annotations

from enum import Enum


class TopicLabel(Enum):
    """Broad transit topic. Codes 0-10 index classifier/report matrices;
    UNASSIGNED marks documents without a strong primary topic."""

    OPERATIONS_DELAYS_PROCEDURES = 0
    SMARTRIP_CARD_FARES = 1
    CUSTOMER_SERVICE = 2
    CLEANLINESS_MAINTENANCE = 3
    INFORMATION_PROVISION = 4
    UNSAFE_DRIVING = 5
    GENERAL = 6
    ROUTE_SUGGESTIONS = 7
    FARE_EVASION = 8
    CROWDING = 9
    CRIME_HARASSMENT_SECURITY = 10
    UNASSIGNED = -1

    @property
    def code(self) -> int:
        return self.value

    @property
    def title(self) -> str:
        return _TITLES[self]

    @classmethod
    def from_code(cls, code: int) -> "TopicLabel":
        return _BY_CODE[code]

    @classmethod
    def from_title(cls, title: str) -> "TopicLabel":
        try:
            return _BY_TITLE[title.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown topic label: {title!r}") from None


_TITLES = {
    TopicLabel.OPERATIONS_DELAYS_PROCEDURES: "Operations / Delays / Procedures",
    TopicLabel.SMARTRIP_CARD_FARES: "SmarTrip Card / Fares",
    TopicLabel.CUSTOMER_SERVICE: "Customer Service",
    TopicLabel.CLEANLINESS_MAINTENANCE: "Cleanliness / Maintenance",
    TopicLabel.INFORMATION_PROVISION: "Information Provision",
    TopicLabel.UNSAFE_DRIVING: "Unsafe Driving",
    TopicLabel.GENERAL: "General",
    TopicLabel.ROUTE_SUGGESTIONS: "Route Suggestions",
    TopicLabel.FARE_EVASION: "Fare Evasion",
    TopicLabel.CROWDING: "Crowding",
    TopicLabel.CRIME_HARASSMENT_SECURITY: "Crime / Harassment / Security",
    TopicLabel.UNASSIGNED: "Unassigned",
}

_BY_CODE = {label.value: label for label in TopicLabel}
_BY_TITLE = {title.lower(): label for label, title in _TITLES.items()}

#: The 11 assignable topics in code order (UNASSIGNED excluded).
ALL_TOPICS: tuple[TopicLabel, ...] = tuple(
    TopicLabel.from_code(c) for c in range(11)
)

#: Canonical label strings in code order, as used on the wire and in reports.
LABEL_TITLES: tuple[str, ...] = tuple(t.title for t in ALL_TOPICS)

N_TOPICS = len(ALL_TOPICS)

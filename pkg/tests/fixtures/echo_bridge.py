"""Scripted stdio bridge endpoint used by the test suite.

Speaks the newline-delimited JSON protocol: one handshake line, then one
response per request. Behavior is driven by the request text so tests can
exercise ordering, timeouts, errors, and malformed output without a real
model behind the pipe:

  ``label:<title>``   respond with that label
  ``drop``            never respond to this id
  ``sleep:<secs>``    delay this response
  ``error``           respond ``{"id": ..., "error": "..."}``
  ``badlabel``        respond with a label outside the advertised set
  ``malformed``       emit a non-JSON line
  ``hold``/``release`` buffer this response until the next request arrives
                       (forces out-of-order delivery)

Anything else echoes the first advertised label. Command-line flags:
``--labels a,b,c`` overrides the advertised label set, ``--proto N``
overrides the handshake version, ``--no-handshake`` skips the handshake.
"""

import argparse
import json
import sys
import time

DEFAULT_LABELS = ["alpha", "beta", "gamma"]


def emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--labels", default=",".join(DEFAULT_LABELS))
    ap.add_argument("--proto", type=int, default=1)
    ap.add_argument("--no-handshake", action="store_true")
    args = ap.parse_args()
    labels = args.labels.split(",")

    if not args.no_handshake:
        emit({"proto": args.proto, "labels": labels})

    held = None
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        rid, text = req["id"], req["text"]

        if held is not None:
            pending, held = held, None
        else:
            pending = None

        if text == "drop":
            pass
        elif text.startswith("sleep:"):
            time.sleep(float(text.split(":", 1)[1]))
            emit({"id": rid, "label": labels[0],
                  "scores": [1.0] + [0.0] * (len(labels) - 1)})
        elif text == "error":
            emit({"id": rid, "error": "scripted failure"})
        elif text == "badlabel":
            emit({"id": rid, "label": "no-such-label", "scores": None})
        elif text == "malformed":
            sys.stdout.write("this is not json\n")
            sys.stdout.flush()
        elif text == "hold":
            held = {"id": rid, "label": labels[0],
                    "scores": [1.0] + [0.0] * (len(labels) - 1)}
        else:
            label = (text.split(":", 1)[1] if text.startswith("label:")
                     else labels[0])
            idx = labels.index(label) if label in labels else 0
            scores = [0.0] * len(labels)
            scores[idx] = 1.0
            emit({"id": rid, "label": label, "scores": scores})

        if pending is not None:
            emit(pending)
    return 0


if __name__ == "__main__":
    sys.exit(main())

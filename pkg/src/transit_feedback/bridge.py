"""Client for the external-model bridge protocol.

Framing is newline-delimited JSON (UTF-8) over a sidecar's stdin/stdout or a
TCP socket. The server opens with a handshake line
``{"proto": 1, "labels": [...]}``; the client then sends
``{"id": int, "text": str}`` requests and reassembles
``{"id": int, "label": str, "scores": [float, ...]}`` responses, which may
arrive out of order. A bounded in-flight window limits outstanding requests;
a per-request timeout marks that record failed without stopping the run.
"""

from __future__ import annotations

import json
import queue
import socket
import subprocess
import threading
import time
from dataclasses import dataclass

PROTO_VERSION = 1
DEFAULT_TIMEOUT = 30.0
DEFAULT_WINDOW = 32


class ProtocolError(Exception):
    pass


@dataclass
class BridgeResult:
    id: int
    label: str | None
    scores: list[float] | None
    failed: bool = False
    error: str | None = None


class BridgeClient:
    """Drives one bridge endpoint from a single coordinating thread."""

    def __init__(self, reader, writer, labels: list[str],
                 timeout: float = DEFAULT_TIMEOUT,
                 window: int = DEFAULT_WINDOW,
                 close_fn=None):
        self._writer = writer
        self._labels = list(labels)
        self._timeout = timeout
        self._window = window
        self._close_fn = close_fn
        self._responses: "queue.Queue[dict | None]" = queue.Queue()
        self._reader_thread = threading.Thread(
            target=self._read_loop, args=(reader,), daemon=True)
        self._reader_thread.start()
        self._do_handshake(timeout)

    @classmethod
    def from_command(cls, cmd: list[str], labels: list[str],
                     timeout: float = DEFAULT_TIMEOUT,
                     window: int = DEFAULT_WINDOW) -> "BridgeClient":
        proc = subprocess.Popen(
            cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, encoding="utf-8", bufsize=1)

        def close():
            try:
                proc.stdin.close()
            except OSError:
                pass
            proc.wait(timeout=5)

        return cls(proc.stdout, proc.stdin, labels, timeout, window, close)

    @classmethod
    def from_tcp(cls, host: str, port: int, labels: list[str],
                 timeout: float = DEFAULT_TIMEOUT,
                 window: int = DEFAULT_WINDOW) -> "BridgeClient":
        sock = socket.create_connection((host, port), timeout=timeout)
        reader = sock.makefile("r", encoding="utf-8")
        writer = sock.makefile("w", encoding="utf-8")

        def close():
            writer.close()
            reader.close()
            sock.close()

        return cls(reader, writer, labels, timeout, window, close)

    def _read_loop(self, reader):
        try:
            for line in reader:
                line = line.strip()
                if not line:
                    continue
                try:
                    self._responses.put(json.loads(line))
                except json.JSONDecodeError:
                    self._responses.put({"_malformed": line})
        finally:
            self._responses.put(None)  # EOF sentinel

    def _do_handshake(self, timeout: float) -> None:
        try:
            hello = self._responses.get(timeout=timeout)
        except queue.Empty:
            raise ProtocolError("no handshake from bridge") from None
        if hello is None or "_malformed" in (hello or {}):
            raise ProtocolError(f"bad handshake line: {hello}")
        if hello.get("proto") != PROTO_VERSION:
            raise ProtocolError(
                f"protocol version mismatch: got {hello.get('proto')}, "
                f"want {PROTO_VERSION}")
        if sorted(hello.get("labels", [])) != sorted(self._labels):
            raise ProtocolError(
                f"label set mismatch: bridge advertises {hello.get('labels')}")

    def _send(self, req_id: int, text: str) -> None:
        self._writer.write(
            json.dumps({"id": req_id, "text": text}, ensure_ascii=False) + "\n")
        self._writer.flush()

    def classify(self, texts: list[str]) -> list[BridgeResult]:
        """One response per request id; out-of-order responses are
        reassembled. Timed-out requests come back failed; an out-of-set label
        is a protocol error."""
        results: dict[int, BridgeResult] = {}
        pending: dict[int, float] = {}  # id -> deadline
        next_to_send = 0
        n = len(texts)

        while len(results) < n:
            while next_to_send < n and len(pending) < self._window:
                self._send(next_to_send, texts[next_to_send])
                pending[next_to_send] = time.monotonic() + self._timeout
                next_to_send += 1
            if not pending:
                break
            wait = max(0.0, min(pending.values()) - time.monotonic())
            try:
                obj = self._responses.get(timeout=wait or 0.01)
            except queue.Empty:
                obj = "timeout"

            if obj == "timeout" or obj is None:
                now = time.monotonic()
                expired = [i for i, dl in pending.items()
                           if obj is None or dl <= now]
                reason = ("bridge closed stream" if obj is None
                          else "timeout")
                for i in expired:
                    del pending[i]
                    results[i] = BridgeResult(i, None, None, failed=True,
                                              error=reason)
                continue
            if "_malformed" in obj:
                raise ProtocolError(f"malformed response: {obj['_malformed']}")
            if obj.get("error") is not None:
                rid = obj.get("id")
                if rid in pending:
                    del pending[rid]
                    results[rid] = BridgeResult(rid, None, None, failed=True,
                                                error=str(obj["error"]))
                continue
            rid = obj.get("id")
            if rid not in pending:
                raise ProtocolError(f"unexpected response id {rid}")
            label = obj.get("label")
            if label not in self._labels:
                raise ProtocolError(f"label outside the label set: {label!r}")
            del pending[rid]
            results[rid] = BridgeResult(rid, label, obj.get("scores"))

        return [results[i] for i in range(n)]

    def close(self) -> None:
        if self._close_fn is not None:
            self._close_fn()

"""Wire-protocol behavior of `feedback-sidecar serve`."""

import json
import subprocess

import pytest

from transit_feedback.bridge import BridgeClient
from transit_feedback.classify import bridge_classify
from transit_feedback.labels import TopicLabel

from feedback_sidecar.labels import LABELS


@pytest.fixture
def raw_server(serve_cmd):
    proc = subprocess.Popen(serve_cmd, stdin=subprocess.PIPE,
                            stdout=subprocess.PIPE, text=True,
                            encoding="utf-8", bufsize=1)
    yield proc
    proc.stdin.close()
    proc.wait(timeout=10)


class TestHandshake:
    def test_server_speaks_first_with_labels(self, raw_server):
        hello = json.loads(raw_server.stdout.readline())
        assert hello["proto"] == 1
        assert hello["labels"] == LABELS
        assert len(hello["labels"]) == 11


class TestRequests:
    def test_valid_request_gets_label_and_scores(self, raw_server):
        raw_server.stdout.readline()  # handshake
        raw_server.stdin.write(json.dumps({"id": 1, "text": "bus late"}) + "\n")
        resp = json.loads(raw_server.stdout.readline())
        assert resp["id"] == 1
        assert resp["label"] in LABELS
        assert len(resp["scores"]) == 11
        assert abs(sum(resp["scores"]) - 1.0) < 1e-6

    def test_malformed_line_gets_error_and_loop_continues(self, raw_server):
        raw_server.stdout.readline()
        raw_server.stdin.write("this is not json\n")
        resp = json.loads(raw_server.stdout.readline())
        assert resp["id"] is None and "error" in resp

        raw_server.stdin.write('gibberish with "id": 42 inside\n')
        resp = json.loads(raw_server.stdout.readline())
        assert resp["id"] == 42 and "error" in resp

        raw_server.stdin.write(json.dumps({"id": 3, "text": "ok"}) + "\n")
        resp = json.loads(raw_server.stdout.readline())
        assert resp["id"] == 3 and "label" in resp

    def test_non_string_text_gets_error_with_id(self, raw_server):
        raw_server.stdout.readline()
        raw_server.stdin.write(json.dumps({"id": 9, "text": 5}) + "\n")
        resp = json.loads(raw_server.stdout.readline())
        assert resp["id"] == 9 and "error" in resp


class TestEngineIntegration:
    def test_engine_client_end_to_end(self, serve_cmd):
        client = BridgeClient.from_command(serve_cmd, LABELS, timeout=30)
        try:
            results = bridge_classify(
                ["the bus was late", "my card would not load"], client)
        finally:
            client.close()
        assert len(results) == 2
        for label, scores in results:
            assert isinstance(label, TopicLabel)
            assert label is not TopicLabel.UNASSIGNED
            assert scores is not None and len(scores) == 11

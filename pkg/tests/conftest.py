from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from causal_audit.fixtures import life_expectancy_graph
from causal_audit.graph import graph_from_names


class FakeChatServer:
    """OpenAI-compatible chat endpoint on localhost.

    ``handler(body, headers)`` returns ``(status, payload)``; by default every
    question is answered "Rating: 2".
    """

    def __init__(self):
        self.requests: list[dict] = []
        self.handler = lambda body, headers: (200, _chat_reply("Rating: 2"))
        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                server.requests.append({"body": body, "auth": self.headers.get("Authorization")})
                status, payload = server.handler(body, dict(self.headers))
                data = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self._httpd.server_address[1]}/v1/chat/completions"
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def close(self):
        self._httpd.shutdown()
        self._httpd.server_close()


def _chat_reply(text: str) -> dict:
    return {"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}


@pytest.fixture
def chat_reply():
    return _chat_reply


@pytest.fixture
def chat_server():
    server = FakeChatServer()
    yield server
    server.close()


@pytest.fixture
def life_graph():
    return life_expectancy_graph()


@pytest.fixture
def pair_graph():
    return graph_from_names(
        ["percent_fair_or_poor_health_rate", "life_expectancy"],
        [("percent_fair_or_poor_health_rate", "life_expectancy")],
        label="pair",
    )


@pytest.fixture
def toy_graph():
    names = ["median_household_income", "life_expectancy", "primary_care_physicians_rate",
             "violent_crime_rate", "percent_smokers"]
    edges = [
        ("median_household_income", "life_expectancy"),
        ("primary_care_physicians_rate", "life_expectancy"),
        ("violent_crime_rate", "life_expectancy"),
        ("percent_smokers", "life_expectancy"),
        ("median_household_income", "primary_care_physicians_rate"),
    ]
    return graph_from_names(names, edges, label="toy")

"""The detection pipeline's sidecar client must understand our responses.

Drives the installed ``oocd`` client against this service in-process: the
client's transport hook is pointed at a TestClient, so the full wire format
(request fields, response fields, clamping) is exercised without sockets.
"""

import pytest

pytest.importorskip("oocd")

from fastapi.testclient import TestClient

from oocd.similarity import fetch_similarity
from sim_sidecar.service import create_app


def test_pipeline_client_reads_our_wire_format():
    app = create_app(backend_kind="hash")
    with TestClient(app) as http:
        def transport(url, payload, timeout):
            response = http.post(url.replace("http://sidecar", ""), json=payload)
            return response.status_code, response.text

        vector = fetch_similarity(
            "a dog runs in the park", "a dog runs in the park",
            "http://sidecar", transport=transport,
        )
        assert vector.source == "sidecar"
        assert vector.s_base >= 0.99
        assert vector.s_large >= 0.99

        vector = fetch_similarity(
            "a dog runs in the park", "stock market crashed",
            "http://sidecar", transport=transport,
        )
        assert 0.0 <= vector.s_base <= 1.0
        assert 0.0 <= vector.s_large <= 1.0

import threading

import pytest

from hemac.server import RolloutServer


@pytest.fixture(scope="session")
def server_address():
    """A live rollout server on an ephemeral loopback port."""
    server = RolloutServer(("127.0.0.1", 0))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield f"{host}:{port}"
    server.shutdown()
    server.server_close()

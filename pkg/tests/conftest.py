import threading
import time

import pytest
import uvicorn

from c19token import bridge, sharesvc


def start_server(app):
    """Run an ASGI app on an ephemeral localhost port in a daemon thread."""
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("uvicorn did not start within 10s")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    return server, thread, f"http://127.0.0.1:{port}"


@pytest.fixture
def share_service_url():
    server, thread, url = start_server(sharesvc.create_app())
    yield url
    server.should_exit = True
    thread.join(timeout=5)


@pytest.fixture
def bridge_service_url():
    server, thread, url = start_server(bridge.create_app())
    yield url
    server.should_exit = True
    thread.join(timeout=5)

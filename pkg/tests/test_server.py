from __future__ import annotations

import json
import urllib.error
import urllib.parse
import urllib.request
from concurrent.futures import ThreadPoolExecutor

import pytest

from conftest import read_query
from visionkg.server import make_server, run_query, serve_in_thread
from visionkg.sparql import JSON_MEDIA_TYPE

PERSON = read_query("person_images.rq")


@pytest.fixture(scope="module")
def endpoint():
    from conftest import build_mixed

    snapshot = build_mixed().snapshot()
    server = make_server(lambda: snapshot, "127.0.0.1", 0, row_cap=500)
    serve_in_thread(server)
    yield f"http://127.0.0.1:{server.server_address[1]}", snapshot
    server.shutdown()
    server.server_close()


def request(url, data=None, content_type=None):
    req = urllib.request.Request(url, data=data)
    if content_type:
        req.add_header("Content-Type", content_type)
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, resp.headers.get("Content-Type"), resp.read().decode()
    except urllib.error.HTTPError as err:
        return err.code, err.headers.get("Content-Type"), err.read().decode()


def test_get_and_post_agree(endpoint):
    base, snapshot = endpoint
    status, ctype, get_body = request(f"{base}/sparql?" + urllib.parse.urlencode({"query": PERSON}))
    assert status == 200 and ctype.startswith(JSON_MEDIA_TYPE)
    status, _, post_body = request(f"{base}/sparql", PERSON.encode(), "application/sparql-query")
    assert status == 200 and post_body == get_body == run_query(snapshot, PERSON)
    assert len(json.loads(get_body)["results"]["bindings"]) == 4


def test_form_post(endpoint):
    base, snapshot = endpoint
    form = urllib.parse.urlencode({"query": PERSON}).encode()
    assert request(f"{base}/sparql", form, "application/x-www-form-urlencoded")[2] == run_query(snapshot, PERSON)


def test_syntax_error_is_400_with_position(endpoint):
    base, _ = endpoint
    status, _, body = request(f"{base}/sparql", b"SELECT ?x WHERE { ?x ?p", "application/sparql-query")
    assert status == 400 and "line 1" in body and "column" in body


def test_missing_query_is_400(endpoint):
    assert request(f"{endpoint[0]}/sparql")[0] == 400


def test_wrong_media_type_is_415(endpoint):
    assert request(f"{endpoint[0]}/sparql", PERSON.encode(), "text/plain")[0] == 415


def test_unknown_path_is_404(endpoint):
    assert request(f"{endpoint[0]}/other")[0] == 404


def test_row_cap_is_413(endpoint):
    query = "SELECT * WHERE { ?a ?p ?b . ?c ?q ?d }"
    assert request(f"{endpoint[0]}/sparql", query.encode(), "application/sparql-query")[0] == 413


def test_concurrent_requests_identical(endpoint):
    base, _ = endpoint
    url = f"{base}/sparql?" + urllib.parse.urlencode({"query": PERSON})
    with ThreadPoolExecutor(8) as pool:
        bodies = {r[2] for r in pool.map(lambda _: request(url), range(16))}
    assert len(bodies) == 1

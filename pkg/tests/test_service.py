import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from remflow.errors import NotFoundError, ValidationError, WrongStateError
from remflow.imageio import bytes_to_photo, load_mask, mask_to_bytes
from remflow.service import SessionStore, create_app
from remflow.service.overlay import OverlaySpec, contour_pixels, render_overlay


@pytest.fixture()
def store(tmp_path):
    return SessionStore(tmp_path / "data")


@pytest.fixture()
def generated(store, tiny_photo_bytes, tiny_mask_bytes, tiny_checkpoint):
    session = store.create_session(tiny_photo_bytes, tiny_mask_bytes)
    return store.run_generate(session.id, str(tiny_checkpoint))


class TestSessionLifecycle:
    def test_create_valid_png(self, store, tiny_photo_bytes):
        session = store.create_session(tiny_photo_bytes)
        assert session.state == "created"
        assert (store.session_dir(session.id) / "input.png").is_file()

    def test_two_uploads_distinct_ids(self, store, tiny_photo_bytes):
        a = store.create_session(tiny_photo_bytes)
        b = store.create_session(tiny_photo_bytes)
        assert a.id != b.id

    def test_corrupt_upload_leaves_nothing(self, store):
        before = store.list_ids()
        with pytest.raises(ValidationError):
            store.create_session(b"definitely not a png")
        assert store.list_ids() == before
        assert list(store.root.glob("*")) == []

    def test_generate_sets_state_and_artifacts(self, generated, store):
        assert generated.state == "generated"
        mask_path = store.session_dir(generated.id) / generated.phase2_mask
        assert mask_path.is_file()
        mask = load_mask(mask_path)
        assert mask.shape == (16, 16)

    def test_generate_twice_overwrites_not_appends(self, generated, store,
                                                   tiny_checkpoint):
        again = store.run_generate(generated.id, str(tiny_checkpoint))
        assert again.state == "generated"
        assert again.iterations == []

    def test_generate_missing_checkpoint(self, store, tiny_photo_bytes):
        session = store.create_session(tiny_photo_bytes)
        with pytest.raises(ValidationError):
            store.run_generate(session.id, "no-such-checkpoint.rfgan")

    def test_refine_before_generate_is_wrong_state(self, store,
                                                   tiny_photo_bytes):
        session = store.create_session(tiny_photo_bytes)
        with pytest.raises(WrongStateError):
            store.run_refine(session.id, text="remove noise")

    def test_quoted_request_appends_iteration(self, generated, store):
        session, clarification = store.run_refine(
            generated.id, text="remove noise in the top-right corner")
        assert clarification is None
        assert session.state == "refining"
        assert len(session.iterations) == 1
        turn = session.chat_log[session.iterations[0].chat_turn]
        assert turn["derived_prompt_patch"] == {"action": "remove_noise",
                                                "region": "top_right"}

    def test_gibberish_yields_clarification_no_iteration(self, generated, store):
        session, clarification = store.run_refine(generated.id,
                                                  text="what is the weather")
        assert clarification is not None
        assert session.iterations == []
        assert session.state == "generated"
        assert session.chat_log[-1]["role"] == "system"

    def test_iteration_chaining_digests(self, generated, store):
        store.run_refine(generated.id, text="close the gaps")
        session, _ = store.run_refine(generated.id, text="make all holes uniform")
        assert len(session.iterations) == 2
        assert session.iterations[1].input_digest == \
            session.iterations[0].output_digest

    def test_metrics_computed_when_ground_truth_present(self, generated, store):
        session, _ = store.run_refine(generated.id, text="close the gaps")
        row = session.iterations[0].metrics
        assert row is not None
        assert set(row) >= {"ssim", "perceptual", "hausdorff_mean", "iou"}

    def test_accept_then_read_only(self, generated, store):
        store.run_refine(generated.id, text="close the gaps")
        session = store.accept_iteration(generated.id, 0)
        assert session.state == "accepted"
        assert session.accepted_iteration == 0
        with pytest.raises(WrongStateError):
            store.run_refine(generated.id, text="close the gaps")
        with pytest.raises(WrongStateError):
            store.run_generate(generated.id, "whatever")

    def test_accept_bad_index(self, generated, store):
        store.run_refine(generated.id, text="close the gaps")
        with pytest.raises(ValidationError):
            store.accept_iteration(generated.id, 5)

    def test_export_requires_accept(self, generated, store):
        store.run_refine(generated.id, text="close the gaps")
        with pytest.raises(WrongStateError):
            store.export_session(generated.id, "svg")
        store.accept_iteration(generated.id, 0)
        svg = store.export_session(generated.id, "svg")
        dxf = store.export_session(generated.id, "dxf")
        assert svg.startswith(b"<?xml")
        assert b"POLYLINE" in dxf or b"ENTITIES" in dxf

    def test_template_path_without_chat(self, generated, store):
        params = {"material": "steel", "defects": "remove specks",
                  "region": "full image", "hole_policy": "keep holes"}
        session, clarification = store.run_refine(
            generated.id, template_id="contour-cleanup", params=params)
        assert clarification is None
        assert len(session.iterations) == 1
        assert "steel" in session.iterations[0].prompt_text

    def test_unknown_session(self, store):
        with pytest.raises(NotFoundError):
            store.load("nope")

    def test_provider_failure_recorded_no_iteration(self, generated, store):
        from remflow.errors import ProviderProtocolError
        from remflow.refine import clear_registry, register_provider

        class Broken:
            id = "broken"

            def edit_image(self, png, prompt, timeout_s):
                raise ProviderProtocolError("bad payload", raw_response_id="r9")

        register_provider(Broken())
        try:
            with pytest.raises(ProviderProtocolError):
                store.run_refine(generated.id, text="close the gaps",
                                 provider_id="broken")
        finally:
            clear_registry()
        session = store.load(generated.id)
        assert session.iterations == []
        assert session.state == "generated"
        assert any("refinement failed" in turn["text"]
                   for turn in session.chat_log if turn["role"] == "system")


class TestCrashSafety:
    def test_crash_before_commit_loses_only_inflight_iteration(
            self, generated, store, monkeypatch):
        store.run_refine(generated.id, text="close the gaps")
        committed = store.load(generated.id)

        original = SessionStore._write_record

        def crashing_write(self, session):
            raise OSError("simulated crash before commit")

        monkeypatch.setattr(SessionStore, "_write_record", crashing_write)
        with pytest.raises(OSError):
            store.run_refine(generated.id, text="make all holes uniform")
        monkeypatch.setattr(SessionStore, "_write_record", original)

        # Restart: a fresh store over the same directory.
        reopened = SessionStore(store.root)
        session = reopened.load(generated.id)
        assert session.state == committed.state
        assert len(session.iterations) == len(committed.iterations)
        # The orphan artifact may exist, but the record never references it.
        referenced = {it.output_mask for it in session.iterations}
        assert f"iter_001.png" not in referenced

    def test_restart_reloads_all_sessions(self, store, tiny_photo_bytes,
                                          tiny_checkpoint):
        ids = []
        for _ in range(3):
            session = store.create_session(tiny_photo_bytes)
            ids.append(session.id)
        store.run_generate(ids[0], str(tiny_checkpoint))
        reopened = SessionStore(store.root)
        assert reopened.list_ids() == sorted(ids)
        assert reopened.load(ids[0]).state == "generated"
        assert reopened.load(ids[1]).state == "created"


class TestStateMachineFuzz:
    # One API call may compose several chain transitions (generate runs
    # created -> preprocessed -> generated, persisting the intermediate), so
    # legality means: never move backwards, never skip the declared chain,
    # and accepted is reachable only from refining.
    LEGAL = {
        "created": {"created", "preprocessed", "generated"},
        "preprocessed": {"preprocessed", "generated"},
        "generated": {"generated", "refining"},
        "refining": {"refining", "accepted"},
        "accepted": {"accepted"},
    }

    def test_randomized_call_sequences(self, store, tiny_photo_bytes,
                                       tiny_mask_bytes, tiny_checkpoint):
        rng = np.random.default_rng(0)
        ops = ("generate", "refine", "gibberish", "accept", "export")
        for trial in range(40):
            session = store.create_session(tiny_photo_bytes, tiny_mask_bytes)
            state = session.state
            for _ in range(6):
                op = ops[int(rng.integers(len(ops)))]
                try:
                    if op == "generate":
                        out = store.run_generate(session.id, str(tiny_checkpoint))
                    elif op == "refine":
                        out, _ = store.run_refine(session.id,
                                                  text="close the gaps")
                    elif op == "gibberish":
                        out, _ = store.run_refine(session.id, text="zzz qqq")
                    elif op == "accept":
                        idx = int(rng.integers(0, 3))
                        out = store.accept_iteration(session.id, idx)
                    else:
                        store.export_session(session.id, "svg")
                        out = store.load(session.id)
                except (WrongStateError, ValidationError):
                    out = store.load(session.id)
                    assert out.state == state  # failed ops don't move state
                assert out.state in self.LEGAL[state], \
                    f"illegal {state} -> {out.state} via {op}"
                state = out.state


class TestOverlay:
    def test_draw_order_topmost_wins(self):
        mask = np.zeros((16, 16), bool)
        mask[4:12, 4:12] = True
        img = render_overlay(mask, mask, mask)
        # identical contours: only the red topmost layer remains
        assert (img == (255, 0, 0)).all(axis=2).sum() == \
            contour_pixels(mask).sum()
        assert not (img == (0, 0, 255)).all(axis=2).any()
        assert not (img == (0, 0, 0)).all(axis=2).any()

    def test_disjoint_contours_pixel_counts(self):
        gt = np.zeros((32, 32), bool)
        gen = np.zeros((32, 32), bool)
        ref = np.zeros((32, 32), bool)
        gt[2:8, 2:8] = True
        gen[12:18, 12:18] = True
        ref[22:28, 22:28] = True
        img = render_overlay(gt, gen, ref)
        for mask, color in ((gt, (0, 0, 0)), (gen, (0, 0, 255)),
                            (ref, (255, 0, 0))):
            count = (img == color).all(axis=2).sum()
            assert count == contour_pixels(mask).sum() == 20

    def test_background_white(self):
        img = render_overlay(np.zeros((8, 8), bool), np.zeros((8, 8), bool),
                             np.zeros((8, 8), bool))
        assert (img == 255).all()

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            OverlaySpec(generated_color=(0, 0, 0)).validate()

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            render_overlay(np.zeros((8, 8), bool), np.zeros((9, 8), bool),
                           np.zeros((8, 8), bool))


class TestHttpApi:
    @pytest.fixture()
    def client(self, tmp_path):
        return TestClient(create_app(tmp_path / "svc"))

    def upload(self, client, tiny_photo_bytes, tiny_mask_bytes=None):
        files = {"photo": ("photo.png", tiny_photo_bytes, "image/png")}
        if tiny_mask_bytes is not None:
            files["ground_truth"] = ("gt.png", tiny_mask_bytes, "image/png")
        resp = client.post("/sessions", files=files)
        assert resp.status_code == 201
        return resp.json()["id"]

    def test_healthz(self, client):
        assert client.get("/healthz").status_code == 200

    def test_full_flow(self, client, tiny_photo_bytes, tiny_mask_bytes,
                       tiny_checkpoint):
        sid = self.upload(client, tiny_photo_bytes, tiny_mask_bytes)
        resp = client.post(f"/sessions/{sid}/generate",
                           json={"checkpoint": str(tiny_checkpoint)})
        assert resp.status_code == 200
        assert resp.json()["state"] == "generated"

        resp = client.post(f"/sessions/{sid}/refine",
                           json={"text": "remove noise in the top-right corner"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["iteration"] == 0 and body["clarification"] is None

        resp = client.get(f"/sessions/{sid}/overlay/0")
        assert resp.status_code == 200
        assert resp.content[:4] == b"\x89PNG"

        resp = client.post(f"/sessions/{sid}/accept", json={"iteration": 0})
        assert resp.status_code == 200 and resp.json()["state"] == "accepted"

        resp = client.get(f"/sessions/{sid}/export?format=svg")
        assert resp.status_code == 200
        assert resp.content.startswith(b"<?xml")
        resp = client.get(f"/sessions/{sid}/export?format=dxf")
        assert resp.status_code == 200 and b"ENTITIES" in resp.content

        resp = client.get(f"/sessions/{sid}")
        assert resp.status_code == 200
        assert resp.json()["state"] == "accepted"

    def test_clarification_flow(self, client, tiny_photo_bytes,
                                tiny_checkpoint):
        sid = self.upload(client, tiny_photo_bytes)
        client.post(f"/sessions/{sid}/generate",
                    json={"checkpoint": str(tiny_checkpoint)})
        resp = client.post(f"/sessions/{sid}/refine",
                           json={"text": "paint it green"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["clarification"] is not None
        assert body["iteration"] is None
        assert body["session"]["iterations"] == []

    def test_error_shape_and_codes(self, client, tiny_photo_bytes):
        resp = client.get("/sessions/missing")
        assert resp.status_code == 404
        assert set(resp.json()) == {"code", "message", "detail"}

        resp = client.post("/sessions",
                           files={"photo": ("x.png", b"junk", "image/png")})
        assert resp.status_code == 422
        assert resp.json()["code"] == "validation"

        sid = self.upload(client, tiny_photo_bytes)
        resp = client.post(f"/sessions/{sid}/refine", json={"text": "hi"})
        assert resp.status_code == 409
        assert resp.json()["code"] == "wrong-state"

    def test_overlay_without_ground_truth(self, client, tiny_photo_bytes,
                                          tiny_checkpoint):
        sid = self.upload(client, tiny_photo_bytes)
        client.post(f"/sessions/{sid}/generate",
                    json={"checkpoint": str(tiny_checkpoint)})
        client.post(f"/sessions/{sid}/refine", json={"text": "close the gaps"})
        resp = client.get(f"/sessions/{sid}/overlay/0")
        assert resp.status_code == 422

    def test_artifact_endpoint(self, client, tiny_photo_bytes, tiny_checkpoint):
        sid = self.upload(client, tiny_photo_bytes)
        client.post(f"/sessions/{sid}/generate",
                    json={"checkpoint": str(tiny_checkpoint)})
        resp = client.get(f"/sessions/{sid}/files/phase2_mask.png")
        assert resp.status_code == 200 and resp.content[:4] == b"\x89PNG"
        resp = client.get(f"/sessions/{sid}/files/other.png")
        assert resp.status_code == 404

"""End-to-end command tests through real subprocesses."""

import json
import os
import signal
import socket
import subprocess
import sys
import time
import urllib.error
import urllib.request

import pytest

from conftest import make_blobs, novel_cluster, write_flow_csv

FAST_ARGS = ["--epochs", "300", "--batch-size", "16", "--hidden-dims", "16,16", "--seed", "9"]


def clean_env(**extra):
    env = {k: v for k, v in os.environ.items() if not k.startswith("FLOWSENTRY_")}
    env.update(extra)
    return env


def run_cli(*args, env=None, timeout=180):
    return subprocess.run(
        [sys.executable, "-m", "flowsentry.cli", *args],
        capture_output=True,
        text=True,
        env=env or clean_env(),
        timeout=timeout,
    )


@pytest.fixture(scope="module")
def train_csv(tmp_path_factory):
    x, labels = make_blobs(n_per=40, seed=11)
    path = tmp_path_factory.mktemp("cli") / "train.csv"
    return str(write_flow_csv(path, x, labels))


@pytest.fixture(scope="module")
def trained(tmp_path_factory, train_csv):
    out = tmp_path_factory.mktemp("cli-bundle")
    bundle = str(out / "model.bundle")
    history = str(out / "history.jsonl")
    test_csv = str(out / "test.csv")
    proc = run_cli(
        "train",
        "--data", train_csv,
        "--bundle", bundle,
        "--out", history,
        "--test-out", test_csv,
        *FAST_ARGS,
    )
    assert proc.returncode == 0, proc.stderr
    return {
        "bundle": bundle,
        "history": history,
        "test_csv": test_csv,
        "stdout": proc.stdout,
        "stderr": proc.stderr,
        "train_csv": train_csv,
    }


class TestTrain:
    def test_writes_bundle_and_history(self, trained):
        assert os.path.exists(trained["bundle"])
        lines = open(trained["history"]).read().splitlines()
        assert len(lines) == 300
        first = json.loads(lines[0])
        assert first["epoch"] == 1
        assert set(first) >= {"epoch", "train_loss", "train_acc", "cv_loss", "cv_acc"}

    def test_reports_ingest_and_split(self, trained):
        assert "read 200 rows: kept 200, dropped 0" in trained["stderr"]
        assert "140 train / 60 test" in trained["stderr"]

    def test_done_line_has_digest(self, trained):
        done = [l for l in trained["stdout"].splitlines() if l.startswith("done:")]
        assert len(done) == 1
        assert "digest=" in done[0] and "cv_acc=" in done[0]

    def test_epoch_lines_streamed(self, trained):
        epochs = [l for l in trained["stdout"].splitlines() if l.startswith("epoch")]
        assert len(epochs) == 300
        assert "train_loss=" in epochs[0]

    def test_heldout_csv_row_count(self, trained):
        rows = open(trained["test_csv"]).read().splitlines()
        assert len(rows) == 61  # header + 30% of 200
        assert rows[0].endswith("Label")

    def test_same_seed_reproduces_digest(self, trained, tmp_path):
        digest = trained["stdout"].rsplit("digest=", 1)[1].strip()
        proc = run_cli(
            "train",
            "--data", trained["train_csv"],
            "--bundle", str(tmp_path / "again.bundle"),
            *FAST_ARGS,
        )
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout.rsplit("digest=", 1)[1].strip() == digest

    def test_missing_data_file_fails_with_path(self, tmp_path):
        proc = run_cli(
            "train", "--data", "/no/such/flows.csv", "--bundle", str(tmp_path / "b")
        )
        assert proc.returncode == 1
        assert "/no/such/flows.csv" in proc.stderr

    def test_bad_hidden_dims_is_usage_error(self, trained, tmp_path):
        proc = run_cli(
            "train",
            "--data", trained["train_csv"],
            "--bundle", str(tmp_path / "b"),
            "--hidden-dims", "16,banana",
        )
        assert proc.returncode == 2
        assert "hidden-dims" in proc.stderr

    def test_missing_required_flag(self, trained):
        proc = run_cli("train", "--data", trained["train_csv"])
        assert proc.returncode == 2

    def test_env_overrides_apply(self, trained, tmp_path):
        history = str(tmp_path / "h.jsonl")
        proc = run_cli(
            "train",
            "--data", trained["train_csv"],
            "--out", history,
            "--seed", "9",
            "--batch-size", "64",
            "--hidden-dims", "16,16",
            env=clean_env(
                FLOWSENTRY_EPOCHS="3",
                FLOWSENTRY_BUNDLE=str(tmp_path / "env.bundle"),
            ),
        )
        assert proc.returncode == 0, proc.stderr
        assert len(open(history).read().splitlines()) == 3
        assert os.path.exists(tmp_path / "env.bundle")

    def test_bad_env_value_is_usage_error(self, trained, tmp_path):
        proc = run_cli(
            "train",
            "--data", trained["train_csv"],
            "--bundle", str(tmp_path / "b"),
            env=clean_env(FLOWSENTRY_EPOCHS="banana"),
        )
        assert proc.returncode == 2
        assert "FLOWSENTRY_EPOCHS" in proc.stderr

    def test_console_script_entry_point(self):
        proc = subprocess.run(
            ["flowsentry", "--help"], capture_output=True, text=True, env=clean_env()
        )
        assert proc.returncode == 0
        assert "train" in proc.stdout and "serve" in proc.stdout


class TestEvaluate:
    def test_table_and_json_report(self, trained, tmp_path):
        out = str(tmp_path / "report.json")
        proc = run_cli(
            "evaluate",
            "--data", trained["train_csv"],
            "--bundle", trained["bundle"],
            "--out", out,
        )
        assert proc.returncode == 0, proc.stderr
        assert "accuracy:" in proc.stdout
        assert "paper_fpr" in proc.stdout
        doc = json.load(open(out))
        assert set(doc) == {"report", "profile"}
        assert doc["report"]["accuracy"] is not None
        classes = {c["class"] for c in doc["report"]["classes"]}
        assert "Normal" in classes
        assert set(doc["profile"]["classes"]) == classes

    def test_evaluate_against_heldout_slice(self, trained):
        proc = run_cli(
            "evaluate", "--data", trained["test_csv"], "--bundle", trained["bundle"]
        )
        assert proc.returncode == 0, proc.stderr
        acc = float(proc.stdout.rsplit("accuracy:", 1)[1].strip())
        assert acc >= 0.9

    def test_corrupt_bundle_fails(self, trained, tmp_path):
        bad = tmp_path / "junk.bundle"
        bad.write_text("{nope")
        proc = run_cli("evaluate", "--data", trained["train_csv"], "--bundle", str(bad))
        assert proc.returncode == 1
        assert "error:" in proc.stderr


class TestClassify:
    def test_one_verdict_per_clean_row(self, trained):
        proc = run_cli(
            "classify", "--data", trained["train_csv"], "--bundle", trained["bundle"]
        )
        assert proc.returncode == 0, proc.stderr
        lines = proc.stdout.splitlines()
        assert len(lines) == 200
        for line in lines:
            record = json.loads(line)
            assert record["kind"] in {"Normal", "Known", "Novel"}
            assert (record["class"] is not None) == (record["kind"] == "Known")
            assert len(record["probs"]) == 5

    def test_empty_input_empty_output(self, trained, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(",".join(f"f{i}" for i in range(78)) + "\n")
        proc = run_cli("classify", "--data", str(empty), "--bundle", trained["bundle"])
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout == ""
        assert "read 0 rows" in proc.stderr

    def test_out_file_instead_of_stdout(self, trained, tmp_path):
        out = str(tmp_path / "verdicts.jsonl")
        proc = run_cli(
            "classify",
            "--data", trained["train_csv"],
            "--bundle", trained["bundle"],
            "--out", out,
        )
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout == ""
        assert len(open(out).read().splitlines()) == 200

    def test_threshold_override_changes_verdicts(self, trained):
        strict = run_cli(
            "classify",
            "--data", trained["train_csv"],
            "--bundle", trained["bundle"],
            "--threshold", "1.0",
        )
        assert strict.returncode == 0
        kinds = {json.loads(l)["kind"] for l in strict.stdout.splitlines()}
        assert kinds == {"Novel"}


def free_port() -> int:
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def wait_for_http(url, proc, deadline=60.0):
    start = time.monotonic()
    while time.monotonic() - start < deadline:
        if proc.poll() is not None:
            raise AssertionError(
                f"server exited early: {proc.returncode}\n{proc.stderr.read()}"
            )
        try:
            with urllib.request.urlopen(url, timeout=2) as resp:
                return json.load(resp)
        except (urllib.error.URLError, ConnectionError, TimeoutError):
            time.sleep(0.1)
    raise AssertionError("server did not come up in time")


class TestServe:
    def start(self, *args):
        return subprocess.Popen(
            [sys.executable, "-m", "flowsentry.cli", "serve", *args],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            env=clean_env(),
        )

    def test_serves_model_and_shuts_down_cleanly(self, trained):
        port = free_port()
        proc = self.start("--bundle", trained["bundle"], "--listen", f"127.0.0.1:{port}")
        try:
            body = wait_for_http(f"http://127.0.0.1:{port}/v1/model", proc)
            assert body["layer_dims"] == [78, 16, 16, 5]
            assert body["threshold"] == 0.8
        finally:
            proc.send_signal(signal.SIGTERM)
            code = proc.wait(timeout=30)
        assert code == 0

    def test_busy_port_refused(self, trained):
        blocker = socket.socket()
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        try:
            proc = self.start(
                "--bundle", trained["bundle"], "--listen", f"127.0.0.1:{port}"
            )
            out, err = proc.communicate(timeout=60)
            assert proc.returncode == 2
            assert f"cannot listen on 127.0.0.1:{port}" in err
        finally:
            blocker.close()

    def test_corrupt_bundle_refused(self, tmp_path):
        bad = tmp_path / "junk.bundle"
        bad.write_text("not json")
        proc = self.start("--bundle", str(bad), "--listen", f"127.0.0.1:{free_port()}")
        out, err = proc.communicate(timeout=60)
        assert proc.returncode == 1
        assert "error:" in err

    def test_quarantine_log_survives_restart(self, trained, tmp_path):
        log = str(tmp_path / "quarantine.jsonl")
        port = free_port()
        args = (
            "--bundle", trained["bundle"],
            "--listen", f"127.0.0.1:{port}",
            "--quarantine-log", log,
        )
        proc = self.start(*args)
        try:
            wait_for_http(f"http://127.0.0.1:{port}/v1/model", proc)
            novel = [novel_cluster(1, seed=99)[0].tolist()]
            req = urllib.request.Request(
                f"http://127.0.0.1:{port}/v1/classify",
                data=json.dumps({"flows": novel}).encode(),
                headers={"Content-Type": "application/json"},
            )
            with urllib.request.urlopen(req, timeout=5) as resp:
                body = json.load(resp)
        finally:
            proc.send_signal(signal.SIGTERM)
            proc.wait(timeout=30)

        if body["verdicts"][0]["kind"] != "Novel":
            pytest.skip("probe flow resolved confidently; nothing quarantined")
        second_port = free_port()
        proc = self.start(
            "--bundle", trained["bundle"],
            "--listen", f"127.0.0.1:{second_port}",
            "--quarantine-log", log,
        )
        try:
            wait_for_http(f"http://127.0.0.1:{second_port}/v1/model", proc)
            with urllib.request.urlopen(
                f"http://127.0.0.1:{second_port}/v1/quarantine", timeout=5
            ) as resp:
                items = json.load(resp)["items"]
            assert len(items) == 1
            assert items[0]["status"] == "pending"
        finally:
            proc.send_signal(signal.SIGTERM)
            proc.wait(timeout=30)

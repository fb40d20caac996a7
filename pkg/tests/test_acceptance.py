"""Acceptance suite: one test per acceptance criterion.

Each test prints a single "ACCEPTANCE <name>: PASS|FAIL" line (visible with
pytest -s or in the captured output) and then asserts. Run with:

    pytest tests/test_acceptance.py -v -s
"""

import io
import time

import numpy as np
import pytest

from conftest import run_cli, random_unit_rows
from corpusgen import generate_cipher_corpus
from test_align import brute_force_csls, random_orthogonal
from test_evaluation import oracle_spearman
from test_sgns import finite_difference_grads, relative_error
from xlex.align import (
    AlignmentConfig,
    align,
    csls,
    csls_translate,
    load_transform,
    normalize_array,
)
from xlex.embedding import TrainingConfig, dumps, from_rows, load_text, loads
from xlex.errors import FormatError, UndefinedCorrelationError
from xlex.evaluation import load_dataset, spearman
from xlex.sgns import pair_loss
from xlex.subword import composed_pair_loss


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: {status}{suffix}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="session")
def cipher_corpus(tmp_path_factory):
    return generate_cipher_corpus(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def e2e_run(cipher_corpus, tmp_path_factory):
    """train both halves -> align -> eval, all through the CLI."""
    base = tmp_path_factory.mktemp("e2e")
    t0 = time.perf_counter()
    for tag, path, seed in (
        ("a", cipher_corpus.lang_a, 7),
        ("b", cipher_corpus.lang_b, 8),
    ):
        result = run_cli(
            "train", path, "--dim", "50", "--epochs", "5", "--min-count", "10",
            "--deterministic", "--seed", str(seed), "--out", base / f"train_{tag}",
        )
        assert result.returncode == 0, result.stderr
    result = run_cli(
        "align", base / "train_a" / "embeddings.txt",
        base / "train_b" / "embeddings.txt",
        "--seed", "3", "--out", base / "aligned",
    )
    assert result.returncode == 0, result.stderr

    dataset = base / "pairs50.tsv"
    src = load_text(base / "train_a" / "embeddings.txt")
    trg = load_text(base / "train_b" / "embeddings.txt")
    rng = np.random.default_rng(123)
    rows = ["word1\tword2\tscore"]
    shared = [w for w in src.vocab.words if cipher_corpus.table[w] in trg.vocab.index]
    picks = rng.choice(len(shared), size=40, replace=False)
    for rank, i in enumerate(picks[:20]):
        w = shared[i]
        rows.append(f"{w}\t{cipher_corpus.table[w]}\t{10 - rank * 0.1:.1f}")
    for rank, (i, j) in enumerate(zip(picks[20:40], picks[:20])):
        w1 = shared[i]
        w2 = cipher_corpus.table[shared[j]]
        rows.append(f"{w1}\t{w2}\t{3 - rank * 0.1:.1f}")
    for k in range(10):  # uncovered pairs: OOV on one side (no digits;
        # preprocessing would strip them and collapse the words)
        rows.append(f"zzqq{chr(97 + k)}xx\t{cipher_corpus.table[shared[0]]}\t1.0")
    dataset.write_text("\n".join(rows) + "\n", encoding="utf-8")

    result = run_cli(
        "eval", "--cross", base / "aligned" / "src_mapped.txt",
        base / "aligned" / "trg_mapped.txt", "--dataset", dataset,
        "--out", base / "report",
    )
    assert result.returncode == 0, result.stderr
    elapsed = time.perf_counter() - t0
    return base, elapsed, result.stdout


class TestReferenceConfiguration:
    def test_reference_defaults_and_format_support(self, tmp_path):
        """Full-corpus reproduction is out of desk-scale reach; what must hold
        is that the shipped defaults pin the replication configuration and
        the released three-column dataset format parses, so anyone holding
        the corpora can rerun the reference setup from a manifest."""
        cfg = TrainingConfig()
        defaults_ok = (
            cfg.mode == "skipgram"
            and cfg.dim == 300
            and cfg.min_count == 1
            and cfg.window == 4
            and cfg.epochs == 100
        )
        # released translation datasets: three columns, optional header
        ds = load_dataset(
            io.StringIO("word1,word2,score\nlion,tau,9.1\nhorse,pitse,7.5\n")
        )
        format_ok = len(ds) == 2
        report(
            "reference-configuration-preserved",
            defaults_ok and format_ok,
            "reference defaults + three-column dataset format",
        )


class TestRotationRecovery:
    def test_planted_rotation_and_noise(self):
        rng = np.random.default_rng(42)
        n, d = 2000, 50
        x = random_unit_rows(rng, n, d)
        q = random_orthogonal(rng, d)
        perm = rng.permutation(n)
        z = np.empty_like(x)
        z[perm] = x @ q
        src = from_rows((f"w{i}", x[i]) for i in range(n))

        t0 = time.perf_counter()
        trg = from_rows((f"t{i}", z[i]) for i in range(n))
        model = align(src, trg, AlignmentConfig(seed=3))
        clean_elapsed = time.perf_counter() - t0
        xw = normalize_array(x) @ model.w_source
        zw = normalize_array(z) @ model.w_target
        clean_p1 = float((csls_translate(xw, zw, k=10) == perm).mean())
        ortho_clean = float(
            np.linalg.norm(model.w_source.T @ model.w_source - np.eye(d))
        )

        zn = z + 0.01 * rng.standard_normal(z.shape)
        zn /= np.linalg.norm(zn, axis=1, keepdims=True)
        trg_noisy = from_rows((f"t{i}", zn[i]) for i in range(n))
        t0 = time.perf_counter()
        model_n = align(src, trg_noisy, AlignmentConfig(seed=3))
        noisy_elapsed = time.perf_counter() - t0
        xw = normalize_array(x) @ model_n.w_source
        zw = normalize_array(zn) @ model_n.w_target
        noisy_p1 = float((csls_translate(xw, zw, k=10) == perm).mean())
        ortho_noisy = float(
            np.linalg.norm(model_n.w_target.T @ model_n.w_target - np.eye(d))
        )

        report(
            "rotation-recovery",
            clean_p1 >= 0.99 and clean_elapsed < 120.0
            and noisy_p1 >= 0.90 and noisy_elapsed < 120.0,
            f"clean P@1={clean_p1:.3f} in {clean_elapsed:.0f}s, "
            f"noisy P@1={noisy_p1:.3f} in {noisy_elapsed:.0f}s",
        )
        report(
            "orthogonality-invariant",
            ortho_clean < 1e-5 and ortho_noisy < 1e-5,
            f"|W^T W - I|_F = {max(ortho_clean, ortho_noisy):.2e}",
        )


class TestGradientChecks:
    def test_sgns_and_subword_gradients(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(100):
            c = rng.standard_normal(8)
            x = rng.standard_normal(8)
            negs = rng.standard_normal((3, 8))
            _, (g_c, g_x, g_n) = pair_loss(c, x, negs)
            fd_c, fd_x, fd_n = finite_difference_grads(c, x, negs)
            worst = max(
                worst,
                relative_error(g_c, fd_c),
                relative_error(g_x, fd_x),
                relative_error(g_n, fd_n),
            )
        for _ in range(100):
            units = rng.standard_normal((4, 8))
            x = rng.standard_normal(8)
            negs = rng.standard_normal((3, 8))
            _, (g_u, g_x, g_n) = composed_pair_loss(units, x, negs)
            fd_c, fd_x, fd_n = finite_difference_grads(units.mean(axis=0), x, negs)
            worst = max(
                worst,
                relative_error(g_u, np.tile(fd_c / 4, (4, 1))),
                relative_error(g_x, fd_x),
                relative_error(g_n, fd_n),
            )
        elapsed = time.perf_counter() - t0
        report(
            "gradient-checks",
            worst < 1e-4 and elapsed < 10.0,
            f"max rel err {worst:.2e} in {elapsed:.1f}s",
        )


class TestSpearmanOracle:
    def test_exact_oracle_equivalence_and_boundaries(self):
        rng = np.random.default_rng(22)
        exact = True
        for _ in range(1000):
            n = int(rng.integers(2, 30))
            xs = rng.integers(0, 8, size=n).astype(float)
            ys = np.round(rng.standard_normal(n), 2)
            try:
                got = spearman(xs, ys)
            except UndefinedCorrelationError:
                continue
            if got != oracle_spearman(xs, ys):
                exact = False
                break
        boundary = (
            spearman([1, 2, 3], [5, 9, 11]) == 1.0
            and spearman([1, 2, 3], [3, 2, 1]) == -1.0
        )
        try:
            spearman([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
            constant_raises = False
        except UndefinedCorrelationError:
            constant_raises = True
        report(
            "spearman-oracle-equivalence",
            exact and boundary and constant_raises,
            "1000 instances exact, boundaries ok",
        )


class TestCslsCorrectness:
    def test_oracle_match_and_hub_fix(self):
        rng = np.random.default_rng(1)
        ok = True
        for _ in range(5):
            sim = rng.uniform(-1, 1, size=(100, 100))
            k = int(rng.integers(1, 20))
            got = csls(sim, k)
            want = brute_force_csls(sim, k)
            ok = ok and float(np.max(np.abs(got - want))) < 1e-12
            ok = ok and np.array_equal(got.argmax(axis=1), want.argmax(axis=1))
            ok = ok and np.array_equal(got.argmax(axis=0), want.argmax(axis=0))

        # crafted hub: cosine retrieval is fooled for at least one query,
        # CSLS restores the true mutual neighbors
        hub_found = False
        for _ in range(500):
            sim = rng.uniform(0.0, 0.3, size=(5, 5))
            sim[np.arange(5), np.arange(5)] += rng.uniform(0.45, 0.65, size=5)
            hub = int(rng.integers(0, 5))
            sim[:, hub] = rng.uniform(0.55, 0.75, size=5)
            sim[hub, hub] = rng.uniform(0.6, 0.8)
            adjusted = csls(sim, 2)
            cos_arg = sim.argmax(axis=1)
            csls_arg = adjusted.argmax(axis=1)
            inverted = [
                i for i in range(5)
                if i != hub and cos_arg[i] == hub and csls_arg[i] == i
            ]
            if inverted and np.array_equal(csls_arg, np.arange(5)):
                hub_found = True
                break
        report(
            "csls-correctness",
            ok and hub_found,
            "oracle match on 100x100 + hub inversion fixed",
        )


class TestEndToEndPipeline:
    def test_cipher_pipeline(self, cipher_corpus, e2e_run):
        base, elapsed, eval_stdout = e2e_run
        src = load_text(base / "aligned" / "src_mapped.txt")
        trg = load_text(base / "aligned" / "trg_mapped.txt")
        gold = cipher_corpus.table
        trg_index = trg.vocab.index
        best = csls_translate(
            np.asarray(src.matrix, np.float64),
            np.asarray(trg.matrix, np.float64),
            k=10,
        )
        hits = total = 0
        for i, w in enumerate(src.vocab.words):
            j = trg_index.get(gold.get(w, ""))
            if j is None:
                continue
            total += 1
            hits += int(best[i] == j)
        p1 = hits / total

        table_ok = False
        lines = eval_stdout.splitlines()
        for i, line in enumerate(lines):
            if line.split() == ["Model", "Coverage", "Spearman"]:
                row = lines[i + 1].split()
                table_ok = (
                    row[0].endswith("(pairs50)")
                    and row[1] == "80.00"  # 40 of 50 pairs covered
                    and len(row) == 3
                )
        report(
            "end-to-end-pipeline",
            p1 >= 0.80 and elapsed < 600.0 and table_ok,
            f"P@1={p1:.3f} over {total} gold pairs in {elapsed:.0f}s, "
            "report in Coverage/Spearman layout",
        )

    def test_e2e_orthogonality(self, e2e_run):
        base, _, _ = e2e_run
        w = load_transform(base / "aligned" / "w_source.txt")
        err = float(np.linalg.norm(w.T @ w - np.eye(w.shape[0])))
        report("orthogonality-invariant-e2e", err < 1e-5, f"{err:.2e}")


class TestDeterminism:
    def test_manifest_reruns_byte_identical(self, cipher_corpus, tmp_path):
        # small deterministic slice of the pipeline, rerun from manifests
        lines = cipher_corpus.lang_a.read_text(encoding="utf-8").splitlines()[:400]
        small = tmp_path / "small.txt"
        small.write_text("\n".join(lines) + "\n", encoding="utf-8")

        t1 = tmp_path / "t1"
        result = run_cli(
            "train", small, "--dim", "24", "--epochs", "2", "--min-count", "5",
            "--deterministic", "--seed", "5", "--out", t1,
        )
        assert result.returncode == 0, result.stderr
        t2 = tmp_path / "t2"
        result = run_cli("train", "--config", t1 / "train_manifest.cfg", "--out", t2)
        assert result.returncode == 0, result.stderr
        train_ok = (t1 / "embeddings.txt").read_bytes() == (
            t2 / "embeddings.txt"
        ).read_bytes() and (t1 / "vocab.tsv").read_bytes() == (
            t2 / "vocab.tsv"
        ).read_bytes()

        rng = np.random.default_rng(50)
        n, d = 300, 16
        x = random_unit_rows(rng, n, d)
        q = random_orthogonal(rng, d)
        from xlex.embedding import save_text

        src = tmp_path / "s.txt"
        trg = tmp_path / "t.txt"
        words = [f"w{chr(97 + i // 26)}{chr(97 + i % 26)}x" for i in range(n)]
        save_text(from_rows(zip(words, x)), src)
        save_text(from_rows(zip(words, x @ q)), trg)
        a1 = tmp_path / "a1"
        a2 = tmp_path / "a2"
        r1 = run_cli("align", src, trg, "--seed", "4", "--out", a1)
        assert r1.returncode == 0, r1.stderr
        r2 = run_cli("align", "--config", a1 / "align_manifest.cfg", "--out", a2)
        assert r2.returncode == 0, r2.stderr
        align_ok = all(
            (a1 / name).read_bytes() == (a2 / name).read_bytes()
            for name in (
                "w_source.txt", "w_target.txt", "src_mapped.txt",
                "trg_mapped.txt", "dictionary.tsv", "align_log.txt",
            )
        )

        ds = tmp_path / "d.tsv"
        ds.write_text(
            "\n".join(f"{words[i]}\t{words[i+1]}\t{float(i)}" for i in range(20))
            + "\n",
            encoding="utf-8",
        )
        e1 = tmp_path / "e1"
        e2 = tmp_path / "e2"
        for out in (e1, e2):
            result = run_cli(
                "eval", a1 / "src_mapped.txt", "--dataset", ds, "--out", out
            )
            assert result.returncode == 0, result.stderr
        eval_ok = (e1 / "report.tsv").read_bytes() == (e2 / "report.tsv").read_bytes()

        report(
            "determinism-manifest-rerun",
            train_ok and align_ok and eval_ok,
            "train, align, eval all byte-identical",
        )


class TestFormatRoundTrips:
    def test_embedding_and_dataset_formats(self):
        rng = np.random.default_rng(12)
        words = [f"w{i}q" for i in range(500)]
        m = from_rows((w, rng.standard_normal(40).astype(np.float32)) for w in words)
        back = loads(dumps(m))
        max_dev = float(np.max(np.abs(back.matrix - m.matrix)))
        roundtrip_ok = max_dev < 1e-5 and back.vocab.words == m.vocab.words

        # released WordSim/SimLex translation shape: 3 columns, header optional
        ds = load_dataset(
            io.StringIO("word1\tword2\tscore\ntau\tnkwe\t8.1\npitse\tpere\t7.0\n")
        )
        ds2 = load_dataset(io.StringIO("tau,nkwe,8.1\npitse,pere,7.0\n"))
        accepts_ok = len(ds) == 2 and len(ds2) == 2
        try:
            load_dataset(io.StringIO("tau\tnkwe\t8.1\nbroken row\n"))
            rejects_ok = False
        except FormatError as exc:
            rejects_ok = exc.line == 2
        report(
            "format-round-trips",
            roundtrip_ok and accepts_ok and rejects_ok,
            f"max embedding deviation {max_dev:.1e}; malformed row "
            "rejected with line number",
        )

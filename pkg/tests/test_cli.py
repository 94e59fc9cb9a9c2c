import numpy as np

import mbpursuit as mb
from mbpursuit import cli


def write_planted(tmp_path, seed=0, m=8, n=12, K=2, l=2):
    rng = np.random.default_rng(seed)
    A = mb.gaussian_dictionary(m, n, seed)
    support = tuple(sorted(rng.choice(n, size=K, replace=False)))
    X = np.exp(1j * rng.uniform(0, 2 * np.pi, (K, l)))
    Y = A.matrix[:, support] @ X
    mat = tmp_path / "A.txt"
    obs = tmp_path / "Y.txt"
    mb.save_matrix(mat, A.matrix)
    mb.save_matrix(obs, Y)
    return mat, obs, support


def test_solve_writes_expected_csv(tmp_path, capsys):
    mat, obs, support = write_planted(tmp_path)
    out = tmp_path / "result.csv"
    code = cli.main(
        [
            "solve",
            "--matrix", str(mat),
            "--observations", str(obs),
            "--branch-vector", "1,1",
            "--output", str(out),
        ]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "support_indices;residual_norm;nodes_expanded;wall_time_ms"
    cells = lines[1].split(";")
    assert cells[0] == ",".join(str(g) for g in support)
    assert float(cells[1]) < 1e-9
    assert int(cells[2]) == 3


def test_solve_stdout_and_refinement_flags(tmp_path, capsys):
    mat, obs, _ = write_planted(tmp_path, seed=1)
    code = cli.main(
        [
            "solve",
            "--matrix", str(mat),
            "--observations", str(obs),
            "--branch-vector", "2,1",
            "--no-dict-refine",
            "--no-subspace-refine",
        ]
    )
    assert code == 0
    outerr = capsys.readouterr()
    assert outerr.out.startswith("support_indices;")


def test_certify_conditions(tmp_path, capsys):
    mat, _, _ = write_planted(tmp_path, seed=2)
    for condition, kind in [
        ("coherence", "coherence"),
        ("babel", "cumulative_coherence"),
        ("neuman", "neuman_erc"),
        ("mb-coherence", "mb_coherence"),
    ]:
        code = cli.main(
            ["certify", "--matrix", str(mat), "--condition", condition, "--K", "2", "--d", "2"]
        )
        assert code == 0
        out = capsys.readouterr().out.strip()
        cells = out.split(";")
        assert cells[0] == kind
        assert cells[3] in ("true", "false")
        float(cells[1]), float(cells[2])


def test_design_d(tmp_path, capsys):
    rng = np.random.default_rng(0)
    from helpers import gram_schmidt

    Q = gram_schmidt(rng.standard_normal((10, 6)) + 1j * rng.standard_normal((10, 6)))
    mat = tmp_path / "Q.txt"
    mb.save_matrix(mat, Q)
    for method in ("bruteforce", "mip"):
        code = cli.main(["design-d", "--matrix", str(mat), "--K", "3", "--method", method])
        assert code == 0
        assert capsys.readouterr().out.strip() == "1,1,1"


def test_experiment_roundtrip(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    config = tmp_path / "cfg.txt"
    config.write_text(
        "kind=recovery\nZ=40\nK=2\nl=2\nsnr_db=15\nM=4\nN=4\n"
        f"branch_vectors=[1,1]\ntrials=5\nseed=3\nout={out}\n"
    )
    code = cli.main(["experiment", "--config", str(config)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "method;param;error_prob;ci95;mean_ms;mean_nodes"
    assert lines[1].startswith("mbmp[1,1];15;")


def test_errors_exit_nonzero(tmp_path, capsys):
    code = cli.main(["experiment", "--config", str(tmp_path / "missing.txt")])
    assert code == 1
    assert "error:" in capsys.readouterr().err

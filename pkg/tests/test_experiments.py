import numpy as np
import pytest

from kuz.analysis import read_csv
from kuz.experiments import (
    ConfigError,
    ExperimentConfig,
    default_config,
    run_experiment,
    run_inviscid,
    run_pulse,
    run_space_convergence,
    run_time_convergence,
    validate_config,
)


def tiny_space_cfg(**over):
    base = dict(
        experiment="space-conv", degrees=(1,), betas=(0.0,),
        nx_list=(4, 8), taus=(1e-2,), t_end=0.05,
    )
    base.update(over)
    return ExperimentConfig(**base)


# -- configuration --------------------------------------------------------


def test_default_configs_carry_study_parameters():
    sc = default_config("space-conv")
    assert sc.degrees == (1, 2, 3)
    assert sc.nx_list == (8, 16, 32, 64)
    assert sc.taus == (1.5e-3,)
    assert sc.betas == (0.0, 1e-3, 1e-2)
    assert sc.kappa == 0.7 and sc.ell == 2.0 and sc.t_end == 0.8

    tc = default_config("time-conv")
    assert tc.nx_list == (128,)
    assert tc.taus == (8e-3, 4e-3, 2e-3, 1e-3)

    inv = default_config("inviscid")
    assert inv.kappa == 0.3 and inv.c_sp == 0.01 and inv.c_time == 1.0
    assert len(inv.nx_list) == len(inv.taus)

    pu = default_config("pulse")
    assert pu.kappa == -0.29
    assert pu.nx_ref == 96 and pu.tau_ref == 4e-4
    assert pu.nx_list == (24, 48)


def test_default_config_unknown_name():
    with pytest.raises(ConfigError):
        default_config("nonsense")


@pytest.mark.parametrize(
    "over",
    [
        {"degrees": (4,)},
        {"degrees": ()},
        {"taus": ()},
        {"taus": (0.0,)},
        {"nx_list": (0,)},
        {"betas": (-1e-3,)},
        {"t_end": 0.0},
        {"solver": "petsc"},
        {"gamma_min": 0.0},
    ],
)
def test_validate_rejects_bad_fields(over):
    with pytest.raises(ConfigError):
        validate_config(tiny_space_cfg(**over))


def test_validate_inviscid_pairing():
    cfg = ExperimentConfig("inviscid", nx_list=(8, 16), taus=(1e-2,))
    with pytest.raises(ConfigError, match="pairs nx with tau"):
        validate_config(cfg)


@pytest.mark.parametrize(
    "nx,ok", [(12, True), (24, True), (48, True), (14, False), (36, False), (96, False)]
)
def test_validate_pulse_ancestry(nx, ok):
    cfg = ExperimentConfig("pulse", nx_list=(nx,), taus=(1e-2,), nx_ref=96)
    if ok:
        validate_config(cfg)
    else:
        with pytest.raises(ConfigError, match="ancestor"):
            validate_config(cfg)


def test_validate_pulse_step_ladder_above_reference():
    cfg = ExperimentConfig("pulse", nx_list=(48,), taus=(1e-2, 4e-4), nx_ref=96)
    with pytest.raises(ConfigError, match="coarser than tau_ref"):
        validate_config(cfg)


# -- drivers at toy scale -------------------------------------------------


def test_space_convergence_rows():
    res = run_space_convergence(tiny_space_cfg())
    assert len(res.rows) == 2
    first, second = res.rows
    assert first.rate is None and second.rate is not None
    assert second.rate > 0.5
    assert first.h > second.h
    assert first.err_grad_dt > second.err_grad_dt > 0
    assert first.err_dt2 > 0
    assert first.err_grad_l6_acc is None
    assert first.t == pytest.approx(0.05)


def test_space_convergence_l6_accumulation_flag():
    res = run_space_convergence(tiny_space_cfg(nx_list=(4,), full_errors=True))
    assert res.rows[0].err_grad_l6_acc > 0


def test_time_convergence_rows():
    cfg = ExperimentConfig(
        "time-conv", degrees=(2,), betas=(0.0,), nx_list=(6,),
        taus=(2e-2, 1e-2), t_end=0.1,
    )
    res = run_time_convergence(cfg)
    assert len(res.rows) == 2
    assert res.rows[0].tau > res.rows[1].tau
    assert res.rows[1].rate is not None
    assert res.rows[0].h == res.rows[1].h


def test_inviscid_rows_and_slope():
    cfg = ExperimentConfig(
        "inviscid", degrees=(2,), betas=(1e-2, 1e-3), nx_list=(6,),
        taus=(2e-2,), t_end=0.1, kappa=0.3, c_sp=0.01, c_time=1.0,
    )
    res = run_inviscid(cfg)
    assert len(res.rows) == 2
    assert res.rows[0].beta == 1e-2  # strongest damping first
    assert res.rows[0].ebar > res.rows[1].ebar > 0
    slope = res.info["slopes"][(2, 6)]
    assert 0.5 < slope < 1.5


def test_pulse_rows_and_monitor():
    cfg = ExperimentConfig(
        "pulse", degrees=(2,), betas=(0.0,), nx_list=(4,),
        taus=(8e-2, 4e-2), t_end=0.16, kappa=-0.29, nx_ref=8, tau_ref=2e-2,
    )
    res = run_pulse(cfg)
    kinds = [r.experiment for r in res.rows]
    assert kinds == ["pulse-space", "pulse-time", "pulse-time"]
    assert res.info["min_monitor"] > 0
    assert all(r.ebar > 0 for r in res.rows)
    assert res.rows[2].rate is not None
    # the step-size ladder rows share the reference mesh
    assert res.rows[1].h == res.rows[2].h < res.rows[0].h * 1.01


def test_run_experiment_writes_csv(tmp_path):
    out = tmp_path / "rows.csv"
    cfg = tiny_space_cfg(nx_list=(4,), out=str(out))
    res = run_experiment(cfg)
    assert out.exists()
    back = read_csv(out)
    assert len(back) == len(res.rows) == 1
    assert back[0].err_grad_dt == pytest.approx(res.rows[0].err_grad_dt, rel=1e-15)


def test_run_experiment_unknown_name():
    cfg = tiny_space_cfg()
    cfg.experiment = "mystery"
    with pytest.raises(ConfigError):
        run_experiment(cfg)

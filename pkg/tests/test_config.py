import pytest

from bankplan import config as C
from bankplan.errors import ConfigError


def test_examples_validate():
    for name, builder in C.EXAMPLES.items():
        cfg = builder()
        assert cfg.name == name
        assert len(cfg.loans) == 3
        tree = cfg.tree()
        # risk-neutral probabilities are calibrated from the loan rates
        assert tree.riskneutral_pds[1] == pytest.approx(0.06 / 0.19)
        assert tree.riskneutral_pds[2] == pytest.approx(0.102 / 0.222)


def test_roundtrip(tmp_path):
    for builder in C.EXAMPLES.values():
        cfg = builder(seed=7)
        path = tmp_path / f"{cfg.name}.yaml"
        C.emit(cfg, path)
        assert C.load(path) == cfg


def test_calibration_notes_present():
    notes = C.example1().calibration_notes
    for knob in ("phi_e", "phi_d", "delta", "r_e"):
        assert knob in notes
        assert "calibrated" in notes[knob]


def test_invalid_configs(tmp_path):
    with pytest.raises(ConfigError):
        C.from_dict({"name": "x"})  # missing everything else
    bad = tmp_path / "bad.yaml"
    bad.write_text("- just\n- a list\n")
    with pytest.raises(ConfigError):
        C.load(bad)
    with pytest.raises(ConfigError):
        C.load(tmp_path / "missing.yaml")


def test_stage1_reference_requirement():
    cfg = C.example1()
    with pytest.raises(ConfigError):
        C.RunConfig(name="x", loans=cfg.loans, params=cfg.params,
                    optimizer=cfg.optimizer, stage0_reference=None,
                    stage1_uses="reference")
    ok = C.RunConfig(name="x", loans=cfg.loans, params=cfg.params,
                     optimizer=cfg.optimizer, stage1_uses="solved")
    assert ok.stage0_reference is None

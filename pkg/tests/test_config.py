import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expsums.config import ExperimentConfig, from_text, merge, parse_text
from expsums.errors import ConfigError


def test_defaults():
    cfg = ExperimentConfig(command="sop")
    assert cfg.l == 2 and cfg.samples == 500 and cfg.kind == "I" and cfg.workers == 1
    assert cfg.canonical() == "command = sop\n"
    assert cfg.calibration.zero_tol == 1e-9


def test_parse_and_canonical():
    text = """
    # survey run
    command = survey-cancel
    kernel = kl:2
    q = 101   # prime
    samples = 2000
    seed = 1
    calib.sigma1_mult_q = 5
    """
    cfg = from_text(text)
    assert cfg.q == 101 and cfg.samples == 2000 and cfg.calib == (("sigma1_mult_q", 5.0),)
    canon = cfg.canonical()
    assert canon.splitlines()[0] == "command = survey-cancel"
    assert from_text(canon) == cfg
    assert from_text(canon).canonical() == canon
    assert cfg.calibration.sigma1_mult_q == 5.0


def test_schedule_and_bool():
    cfg = from_text("command = bilinear\nkernel = kl:2\nschedule = 1009, 2003\nquick = yes\nmexp = 0.45")
    assert cfg.schedule == (1009, 2003) and cfg.primes() == (1009, 2003)
    assert cfg.quick is True and cfg.mexp == 0.45
    assert "schedule = 1009,2003" in cfg.canonical()


@pytest.mark.parametrize(
    "text,field,line",
    [
        ("command = sop\nbogus = 3", "bogus", 2),
        ("command = sop\n\nq = abc", "q", 3),
        ("command = sop\ncalib = 3", "calib", 2),
        ("command = sop\ncalib.zero_tol = tiny", "calib.zero_tol", 2),
        ("command = sop\nquick = maybe", "quick", 2),
    ],
)
def test_diagnostics(text, field, line):
    with pytest.raises(ConfigError) as ei:
        parse_text(text)
    assert ei.value.field == field and ei.value.line == line
    assert f"line {line}" in str(ei.value)


def test_no_equals_sign():
    with pytest.raises(ConfigError) as ei:
        parse_text("command = sop\njust words")
    assert ei.value.line == 2


@pytest.mark.parametrize(
    "text,field",
    [
        ("kernel = kl:2", "command"),
        ("command = frobnicate", "command"),
        ("command = sop\nq = 7", "kernel"),
        ("command = sop\nkernel = kl:2", "q"),
        ("command = sop\nkernel = kl:2\nq = 7\nformat = xml", "format"),
        ("command = sop\nkernel = kl:2\nq = 7\nl = 0", "l"),
        ("command = bilinear\nkernel = kl:2\nq = 7\nmode = sample", "mode"),
        ("command = survey-cancel\nkernel = kl:2\nq = 7\nmode = opnorm", "mode"),
        ("command = sop\nkernel = kl:2\nq = 7\ncalib.nope = 1", "calib.nope"),
        ("command = nu\nq = 7\nkind = III", "kind"),
    ],
)
def test_validation(text, field):
    with pytest.raises(ConfigError) as ei:
        from_text(text)
    assert ei.value.field == field


def test_merge_overrides():
    base = parse_text("command = sop\nkernel = kl:2\nq = 7\nseed = 3\ncalib.sop_mult = 4")
    cfg = merge(base, {"q": 11, "seed": None, "calib": (("zero_tol", 1e-6),)})
    assert cfg.q == 11 and cfg.seed == 3
    assert dict(cfg.calib) == {"sop_mult": 4.0, "zero_tol": 1e-6}


params = st.fixed_dictionaries(
    {
        "q": st.sampled_from([5, 7, 101]),
        "l": st.integers(1, 4),
        "b": st.integers(-5, 5).filter(bool),
        "samples": st.integers(1, 5000),
        "seed": st.integers(0, 10**6),
        "mexp": st.floats(0.1, 0.9, allow_nan=False),
        "coeffs": st.sampled_from(["ones", "sign", "unit"]),
        "quick": st.booleans(),
    }
)


@settings(max_examples=60, deadline=None)
@given(params, st.dictionaries(st.sampled_from(["sop_mult", "epsilon"]), st.floats(0.01, 100)))
def test_canonical_round_trip(values, calib):
    cfg = ExperimentConfig(command="sop", kernel="kl:2", calib=tuple(sorted(calib.items())), **values).validate()
    again = from_text(cfg.canonical())
    assert again == cfg
    assert again.canonical() == cfg.canonical()

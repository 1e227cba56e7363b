import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inertial_ch.config import ConfigError, RunConfig, load_config, parse_config

GOOD = """\
[problem]
dim = 1
n = 16
epsilon = 0.1
f = 0, -1, 0, 1   # cubic
g = smooth

[integrator]
scheme = reference
T = 2
dt = 0.01

[experiment]
u0 = random
rng_seed = 7
observers = energy, x0_norm
"""


def test_parse_good():
    cfg = parse_config(GOOD)
    assert cfg.n == 16 and cfg.epsilon == 0.1 and cfg.T == 2.0
    assert cfg.f == (0.0, -1.0, 0.0, 1.0)
    assert cfg.scheme == "reference"
    assert cfg.observers == ("energy", "x0_norm")
    assert cfg.L is None


def test_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()


@pytest.mark.parametrize(
    "text, line",
    [
        ("[problem]\nn = 16\nfoo = 3\n", 3),
        ("[problem]\nepsilon = abc\n", 2),
        ("[problem]\nepsilon = 0\n", 2),
        ("[problem]\nepsilon = 1.5\n", 2),
        ("[integrator]\nscheme = rk4\n", 2),
        ("[integrator]\n\ndt = -1\n", 3),
        ("[problem]\nn = 2.5\n", 2),
        ("[experiment]\nobservers = energy, nope\n", 2),
    ],
)
def test_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as ei:
        parse_config(text, "x.ini")
    assert ei.value.line == line
    assert "x.ini" in str(ei.value)


def test_unknown_section_and_syntax():
    with pytest.raises(ConfigError) as ei:
        parse_config("[physics]\na = 1\n")
    assert ei.value.line == 1
    with pytest.raises(ConfigError):
        parse_config("n = 3\n")
    with pytest.raises(ConfigError):
        parse_config("[problem]\nn = 1\nn = 2\n")


def test_two_d_list_must_be_square():
    with pytest.raises(ConfigError):
        parse_config("[problem]\ndim = 2\nn = 4\ng = 1, 2, 3\n")
    cfg = parse_config("[problem]\ndim = 2\nn = 4\ng = 1, 2, 3, 4\n")
    assert cfg.forcing().coeffs[1, 1] == 4.0


def test_builders():
    cfg = parse_config(GOOD)
    p = cfg.problem()
    assert p.n == 16 and p.epsilon == 0.1
    assert cfg.integrator().scheme == "reference"
    s = cfg.initial_state()
    assert s.u.n == 16 and not np.any(s.v.coeffs)
    # random data are drawn at the largest cutoff and truncated, so levels nest
    assert np.array_equal(cfg.initial_field(8).coeffs, cfg.initial_field(32).coeffs[:8])
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "none.ini")


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=200))
def test_parsing_is_total(text):
    try:
        parse_config(text)
    except ConfigError:
        pass


@settings(max_examples=100, deadline=None)
@given(
    st.sampled_from(["problem", "integrator", "experiment"]),
    st.sampled_from(["n", "epsilon", "f", "g", "dt", "T", "scheme", "u0", "gaps", "L", "rng_seed", "observers"]),
    st.text(alphabet="0123456789.,-+eE abcxyz", max_size=20),
)
def test_parsing_is_total_on_structured_input(section, key, value):
    try:
        parse_config(f"[{section}]\n{key} = {value}\n")
    except ConfigError:
        pass

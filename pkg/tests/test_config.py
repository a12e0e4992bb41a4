import pytest

from crsim.config import (DEFAULT_CONFIG, REQUIRED_KEYS, ConfigError, SystemConfig, db_to_linear,
                          format_config, load_config, parse_config)

FULL = """
mp=2
m1=4
m2=4
alpha=0.5
sigma_s_db=20
sigma_n1_db=0
sigma_n2_db=0
n_frame=1000
power_total=20000
chi1=0.16
"""


def test_default_is_the_running_example():
    c = DEFAULT_CONFIG
    assert (c.mp, c.m1, c.m2, c.alpha) == (2, 4, 4, 0.5)
    assert c.sigma_s2 == pytest.approx(100.0)
    assert (c.n_frame, c.power_total, c.chi1) == (1000, 20000.0, 0.16)
    assert (c.k1, c.k2) == (2, 2)


def test_parse_full_file_matches_default():
    assert parse_config(FULL) == DEFAULT_CONFIG


@pytest.mark.parametrize("key", REQUIRED_KEYS)
def test_missing_required_key_is_named(key):
    text = "\n".join(l for l in FULL.splitlines() if not l.startswith(key + "="))
    with pytest.raises(ConfigError, match=repr(key)):
        parse_config(text)


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="'foo'"):
        parse_config(FULL + "foo=1\n")


def test_malformed_value_is_named():
    with pytest.raises(ConfigError, match="'alpha'"):
        parse_config(FULL.replace("alpha=0.5", "alpha=half"))


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(FULL + "mp=2\n")


def test_chi1_and_zeta_are_exclusive():
    with pytest.raises(ConfigError):
        parse_config(FULL + "zeta=1\n")
    with pytest.raises(ConfigError):
        parse_config(FULL.replace("chi1=0.16", ""))
    c = parse_config(FULL.replace("chi1=0.16", "zeta=2.5"))
    assert c.zeta == 2.5 and c.chi1 is None


@pytest.mark.parametrize("changes, needle", [
    ({"m1": 2}, "m1"),
    ({"m1": 5, "m2": 4}, "K1 <= K2"),
    ({"alpha": 0.0}, "alpha"),
    ({"alpha": 1.5}, "alpha"),
    ({"power_total": -1.0}, "power_total"),
    ({"n_frame": 3}, "n_frame"),
    ({"trials": 0}, "trials"),
])
def test_invariant_violations_are_named(changes, needle):
    with pytest.raises(ConfigError, match=needle):
        DEFAULT_CONFIG.replace(**changes)


def test_comments_and_blank_lines(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# scenario\n" + FULL.replace("mp=2", "mp=2   # PR antennas") + "\n\n")
    assert load_config(p) == DEFAULT_CONFIG


def test_format_round_trip():
    c = DEFAULT_CONFIG.replace(sigma_s2=db_to_linear(3.7), zeta=0.4, trials=77, seed=9)
    back = parse_config(format_config(c))
    assert back == c


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_replace_switches_between_zeta_and_chi1():
    c = DEFAULT_CONFIG.replace(zeta=1.0)
    assert c.chi1 is None
    assert c.replace(chi1=0.3).zeta is None
    assert isinstance(c, SystemConfig)

import pytest

from memir.config import (
    ABLATIONS,
    PROFILES,
    get_profile,
    load_config,
    parse_ablations,
    parse_config,
    profile_record,
)
from memir.errors import ConfigError


def test_profiles_exist():
    assert set(PROFILES) == {"locomo_default", "beam_default"}


def test_unknown_profile():
    with pytest.raises(ConfigError):
        get_profile("nope")


def test_defaults_for_rrf_and_bm25():
    for p in PROFILES.values():
        assert p.retrieval.rrf_k == 60
        assert (p.retrieval.bm25_k1, p.retrieval.bm25_b) == (1.2, 0.75)
        assert p.utilization.rerank_keep_k == p.utilization.pool_m
        assert p.ablation_flags == frozenset()


def test_parse_config_overrides():
    text = """
    # tighter budget
    profile = beam_default
    utilization.select_budget_x = 3   # comment after value
    retrieval.rrf_k = 10.5
    ablate = no_cues, no_bundles
    """
    p = parse_config(text)
    assert p.name == "custom"
    assert p.utilization.select_budget_x == 3
    assert p.utilization.pool_m == 72
    assert p.retrieval.rrf_k == 10.5
    assert p.compile.max_claims_per_page == 18
    assert p.ablation_flags == {"no_cues", "no_bundles"}


def test_profile_only_keeps_name():
    assert parse_config("profile = beam_default\n").name == "beam_default"
    assert parse_config("").name == "locomo_default"


@pytest.mark.parametrize(
    "text",
    [
        "nonsense",
        "utilization.unknown = 1",
        "bogus.pool_m = 1",
        "utilization.pool_m = many",
        "utilization.pool_m = 0",
        "utilization.rerank_keep_k = 99",
        "ablate = no_everything",
        "profile = missing",
    ],
)
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.conf")


def test_load_config_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("compile.max_claims_per_page = 4\n")
    assert load_config(path).compile.max_claims_per_page == 4


def test_parse_ablations():
    assert parse_ablations(None) == frozenset()
    assert parse_ablations("no_claims,,no_cues") == {"no_claims", "no_cues"}
    assert parse_ablations(list(ABLATIONS)) == set(ABLATIONS)
    with pytest.raises(ConfigError):
        parse_ablations(["no_claims", "extra"])


def test_with_ablations_validates():
    p = get_profile("locomo_default").with_ablations(["no_projection"])
    assert p.ablation_flags == {"no_projection"}
    with pytest.raises(ConfigError):
        p.with_ablations(["nope"])


def test_profile_record_round_trips_values():
    rec = profile_record(get_profile("beam_default").with_ablations(["no_cues"]))
    assert rec["compile"]["max_claims_per_page"] == 18
    assert rec["utilization"]["select_budget_x"] == 10
    assert rec["ablation_flags"] == ["no_cues"]

import pytest

from waysim.agents import (
    Credential,
    RemovalPolicy,
    RequestEnvelope,
    Stage,
    Step,
    UserStatus,
    ViolationReport,
    WorldState,
    csua_gate,
    csua_handle_report,
    cspa_gate,
    process_request,
    proxy_authenticate,
    record_outcome,
)
from waysim.behavior import TaskSpec
from waysim.trust_core import DOMAIN_LAYER, USER_LAYER, ActionClass, TrustLedger

P, M = ActionClass.POSITIVE, ActionClass.MALICIOUS


@pytest.fixture
def world():
    w = WorldState(USER_LAYER, DOMAIN_LAYER, RemovalPolicy())
    w.add_domain("uniA")
    w.add_user("alice", "uniA", "pw")
    return w


def env(rid=1, user="alice", password="pw", domain="uniA"):
    return RequestEnvelope(rid, user, Credential(user, password), TaskSpec("1001"), domain)


def always(action):
    return lambda uid: action


def never(uid):
    raise AssertionError("task must not execute")


def set_value(world, user=None, domain=None, value=None):
    led = TrustLedger(0, 0, value, None)
    if user:
        world.users[user].ledger = led
    if domain:
        world.domains[domain].ledger = led


# -- proxy -------------------------------------------------------------------

def test_proxy_accepts_valid_credentials(world):
    assert proxy_authenticate(world, env()) is None


def test_proxy_rejects_wrong_password_and_unknown_user(world):
    assert proxy_authenticate(world, env(password="nope")) is Stage.DROPPED_AUTH
    assert proxy_authenticate(world, env(user="mallory")) is Stage.DROPPED_AUTH


def test_proxy_rejects_removed_user(world):
    world.users["alice"].status = UserStatus.REMOVED
    assert proxy_authenticate(world, env()) is Stage.DROPPED_REMOVED_USER


# -- gates -------------------------------------------------------------------

@pytest.mark.parametrize("value,expected", [(0.9, True), (0.2, False), (0.15, False)])
def test_csua_gate(world, value, expected):
    set_value(world, user="alice", value=value)
    before = world.ledgers()
    assert csua_gate(world, "alice") is expected
    assert world.ledgers() == before


@pytest.mark.parametrize("value,expected", [(0.8, True), (0.1, False), (0.05, False)])
def test_cspa_gate(world, value, expected):
    set_value(world, domain="uniA", value=value)
    assert cspa_gate(world, "uniA") is expected


def test_cspa_gate_unknown_domain_drops(world):
    assert cspa_gate(world, "nowhere") is False


# -- record_outcome / reports ------------------------------------------------

def test_record_positive_fresh(world):
    assert record_outcome(world, env(), P) is None
    assert world.users["alice"].ledger.value == pytest.approx(0.9)
    assert world.domains["uniA"].ledger.value == 1.0


def test_record_malicious_fresh(world):
    rep = record_outcome(world, env(), M)
    assert isinstance(rep, ViolationReport) and rep.action is M
    assert world.users["alice"].ledger.value == 0.0
    assert world.domains["uniA"].ledger.value == 0.0


def test_record_ppm(world):
    for i, a in enumerate([P, P, M], start=1):
        record_outcome(world, env(i), a)
    # (2/3) * 0.8 and (2/3) * 0.9
    assert world.users["alice"].ledger.value == pytest.approx(0.5333333333333333, abs=1e-12)
    assert world.domains["uniA"].ledger.value == pytest.approx(0.6, abs=1e-12)


def test_violation_report_requires_negative():
    with pytest.raises(ValueError):
        ViolationReport("alice", "uniA", P, 1)


def test_strike_limit_removes(world):
    world.users["alice"].strikes = 2
    set_value(world, user="alice", value=0.5)
    assert csua_handle_report(world, ViolationReport("alice", "uniA", M, 1)) is True
    assert world.users["alice"].status is UserStatus.REMOVED


def test_single_strike_above_threshold_stays_active(world):
    set_value(world, user="alice", value=0.4)
    assert csua_handle_report(world, ViolationReport("alice", "uniA", M, 1)) is False
    assert world.users["alice"].strikes == 1
    assert world.users["alice"].status is UserStatus.ACTIVE


def test_threshold_trigger_removes(world):
    set_value(world, user="alice", value=0.15)
    assert csua_handle_report(world, ViolationReport("alice", "uniA", M, 1)) is True


def test_threshold_trigger_can_be_disabled():
    w = WorldState(USER_LAYER, DOMAIN_LAYER, RemovalPolicy(strike_limit=3, threshold_trigger=False))
    w.add_domain("d")
    w.add_user("u", "d", "pw")
    w.users["u"].ledger = TrustLedger(0, 0, 0.15, None)
    assert csua_handle_report(w, ViolationReport("u", "d", M, 1)) is False


def test_unknown_user_report_ignored(world, caplog):
    assert csua_handle_report(world, ViolationReport("ghost", "uniA", M, 1)) is False
    assert "unknown user" in caplog.text


# -- full pipeline -----------------------------------------------------------

def test_delivered_positive(world):
    out = process_request(world, env(), always(P))
    assert out.stage is Stage.DELIVERED
    assert out.decision.action_taken is P
    assert world.users["alice"].ledger.value == pytest.approx(0.9)
    assert [g.gate for g in out.gates] == ["proxy", "csu_a", "csp_a"]
    assert all(g.passed for g in out.gates)
    steps = [e.step for e in out.events]
    assert steps[0] is Step.CREDENTIALS and steps[-1] is Step.DATA_RECEIVED
    assert Step.NOTIFY_CSU_A not in steps


def test_wrong_password_changes_nothing(world):
    before = world.ledgers()
    out = process_request(world, env(password="bad"), never)
    assert out.stage is Stage.DROPPED_AUTH
    assert out.decision.action_taken is None
    assert world.ledgers() == before


def test_low_user_trust_never_reaches_csp(world):
    set_value(world, user="alice", value=0.1)
    before = world.ledgers()
    out = process_request(world, env(), never)
    assert out.stage is Stage.DROPPED_USER_TRUST
    assert Step.REACH_CSP not in [e.step for e in out.events]
    assert world.ledgers() == before


def test_low_domain_trust_drops_and_notifies(world):
    set_value(world, domain="uniA", value=0.05)
    out = process_request(world, env(), never)
    assert out.stage is Stage.DROPPED_DOMAIN_TRUST
    assert out.decision.action_taken is None
    assert out.events[-1].step is Step.NOTIFY_CSU_A
    assert world.users["alice"].strikes == 0


def test_malicious_delivery_reports_and_removes(world):
    out = process_request(world, env(), always(M))
    assert out.stage is Stage.DELIVERED
    assert out.report is not None and out.removed
    assert world.users["alice"].status is UserStatus.REMOVED
    out2 = process_request(world, env(2), never)
    assert out2.stage is Stage.DROPPED_REMOVED_USER


def test_credential_user_mismatch_is_auth_drop(world):
    world.add_user("bob", "uniA", "pw2")
    bad = RequestEnvelope(1, "alice", Credential("bob", "pw2"), TaskSpec("1"), "uniA")
    assert process_request(world, bad, never).stage is Stage.DROPPED_AUTH


def test_add_user_unknown_domain(world):
    with pytest.raises(KeyError):
        world.add_user("carol", "nowhere", "x")


def test_step_labels_round_trip():
    for s in Step:
        assert Step.from_label(s.label) is s

from hyperribbon import properties


def test_thm2_suite_small_run():
    r = properties.check_thm2(trials=20, seed=5)
    assert r.passed and r.violations == 0
    assert r.checks > 20 * 9


def test_trial_count_scales_checks():
    a = properties.check_thm2(trials=10, eps_values=(0.5,), seed=1)
    b = properties.check_thm2(trials=20, eps_values=(0.5,), seed=1)
    assert b.checks > a.checks


def test_invalid_eps_reports_domain_error():
    r = properties.check_thm2(trials=3, eps_values=(1.0,))
    assert r.status == "error" and not r.passed
    assert "DomainError" in r.message
    d = r.to_dict()
    assert d["status"] == "error"


def test_closed_form_and_truncation_suites():
    for r in (properties.check_closed_form(Ns=(5, 11), precision=40),
              properties.check_thm1(n_funcs=4, Ns=(2, 10, 30)),
              properties.check_taylor_error(n_funcs=4, Ns=(3, 9, 15))):
        assert r.passed, (r.name, r.worst_margin, r.details)


def test_enclosure_suites():
    assert properties.check_polynomial_enclosure(samples=200, precision=40).passed
    adv = properties.check_adversarial_enclosure(precision=40)
    assert adv.passed and adv.details["detected"] and adv.details["enclosure_margin"] > 0

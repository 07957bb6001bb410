import json

import numpy as np
import pytest

from marlab.detrend import TrendSpec
from marlab.errors import DataError
from marlab.mar import ErrorDist, MarModel
from marlab.montecarlo import (Dgp, McConfig, TrendComponent,
                               default_paper_config, load_trend_file,
                               report_to_json, run_coefficients,
                               run_identification, run_mse)

DIST = ErrorDist.student_t(2.0)


def small_config(**kw):
    base = dict(
        replications=6, T=150,
        dgps=(Dgp("MAR(0,1) + no trend", MarModel(phi=[], psi=[0.8], dist=DIST)),),
        detrenders=(TrendSpec.polynomial(2),),
        p_max=3, master_seed=42,
    )
    base.update(kw)
    return McConfig(**base)


class TestDeterminism:
    def test_identical_reports_across_worker_counts(self):
        cfg1 = small_config(n_jobs=1)
        cfg2 = small_config(n_jobs=2)
        a = report_to_json(run_mse(cfg1), run_identification(cfg1), None, cfg1)
        b = report_to_json(run_mse(cfg2), run_identification(cfg2), None, cfg2)
        assert a == b

    def test_same_seed_same_tables(self):
        t1 = run_mse(small_config())
        t2 = run_mse(small_config())
        assert t1.equals(t2)

    def test_different_seed_differs(self):
        t1 = run_mse(small_config())
        t2 = run_mse(small_config(master_seed=43))
        assert not t1.equals(t2)


class TestMse:
    def test_raw_on_trendless_dgp_is_exact(self):
        cfg = small_config(detrenders=(None, TrendSpec.polynomial(2)))
        tab = run_mse(cfg)
        assert tab.loc["MAR(0,1) + no trend", "raw"] == 0.0
        assert tab.loc["MAR(0,1) + no trend", "t^2"] > 0.0

    def test_known_trend_subtracted_exactly(self):
        trend = TrendComponent("lin", TrendSpec.polynomial(1), (2.0, 30.0))
        dgp = Dgp("MAR(1,0) + lin", MarModel(phi=[0.6], psi=[], dist=DIST), trend)
        cfg = small_config(dgps=(dgp,),
                           detrenders=(TrendSpec.polynomial(1),
                                       TrendSpec.polynomial(4)))
        tab = run_mse(cfg)
        # the linear family contains the truth, order 4 wastes flexibility
        assert tab.loc["MAR(1,0) + lin", "t^1"] < tab.loc["MAR(1,0) + lin", "t^4"]


class TestIdentification:
    def test_columns_and_bounds(self):
        cfg = small_config(replications=8)
        tab = run_identification(cfg)
        row = tab.loc[("MAR(0,1) + no trend", "raw")]
        for col in ("p_wrong", "p_over", "mar_wrong", "s_zero"):
            assert 0.0 <= row[col] <= 100.0
        assert np.isnan(row["s_positive"])   # dgp has a true lead part
        assert ("MAR(0,1) + no trend", "t^2") in tab.index

    def test_wrong_p_implies_wrong_mar(self):
        cfg = small_config(replications=10, T=200)
        tab = run_identification(cfg)
        for _, row in tab.iterrows():
            assert row["mar_wrong"] >= row["p_wrong"] - 1e-3

    def test_causal_dgp_reports_spurious_lead(self):
        dgp = Dgp("MAR(1,0) + no trend", MarModel(phi=[0.6], psi=[], dist=DIST))
        tab = run_identification(small_config(dgps=(dgp,), replications=8))
        row = tab.loc[("MAR(1,0) + no trend", "raw")]
        assert 0.0 <= row["s_positive"] <= 100.0
        assert np.isnan(row["s_zero"])


class TestCoefficients:
    def test_summary_shape(self):
        cfg = small_config(replications=10, T=250)
        out = run_coefficients(cfg)
        cell = out["MAR(0,1) + no trend"]["raw"]
        assert set(cell) == {"psi1", "dof"}
        five = cell["psi1"]
        assert five["min"] <= five["q1"] <= five["median"] <= five["q3"] <= five["max"]
        assert five["count"] <= 10

    def test_only_correct_fits_counted(self):
        cfg = small_config(replications=6)
        out = run_coefficients(cfg)
        for cell in out["MAR(0,1) + no trend"].values():
            if cell:
                assert cell["psi1"]["count"] <= cfg.replications


class TestDefaultStudy:
    def test_structure(self):
        cfg = default_paper_config(replications=5)
        assert len(cfg.dgps) == 12
        assert len(cfg.detrenders) == 4
        names = [d.name for d in cfg.dgps]
        assert "MAR(0,1) + no trend" in names
        assert "MAR(1,1) + breaks" in names
        specs = {d.describe() for d in cfg.detrenders}
        assert specs == {"t^4", "t^6", "hp(14400)", "hp(129600)"}

    def test_cycle_parameters(self):
        cfg = default_paper_config(replications=5)
        by_name = {d.name: d for d in cfg.dgps}
        m = by_name["MAR(1,1) + tau6"].model
        assert m.phi.tolist() == [0.6]
        assert m.psi.tolist() == [0.8]
        assert m.dist.dof == 2.0
        assert m.dist.kind == "student_t"

    def test_packaged_trend_file_labelled(self):
        trends = load_trend_file()
        assert set(trends) >= {"tau4", "tau6", "breaks"}
        assert trends["tau6"].spec.order == 6
        t = trends["breaks"].values(400)
        assert np.all(np.isfinite(t))

    def test_malformed_file_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"trends": {"tau4": {"method": "wavelet"}}}))
        with pytest.raises(DataError):
            load_trend_file(bad)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(DataError, match="no such trend file"):
            load_trend_file(tmp_path / "none.json")


class TestConfigValidation:
    def test_bad_replications(self):
        with pytest.raises(DataError):
            small_config(replications=0)

    def test_report_json_roundtrips(self):
        cfg = small_config()
        doc = json.loads(report_to_json(run_mse(cfg), None, None, cfg))
        assert doc["config"]["replications"] == 6
        assert "MAR(0,1) + no trend" in doc["mse"]

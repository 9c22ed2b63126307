# tests/test_bench.py

import math

import pandas as pd
import pytest
from pydantic import ValidationError

from src.core.errors import DumpCorrupt, SpecInvalid
from src.models.chain_models import ChainMode
from src.services.bench_service import (
    CSV_METRIC_COLUMNS, IMMUTABLE, REDACTABLE, BenchResult, BenchSpec, bench_validate, fit_overhead_trend,
    generate_chain, results_frame, run_overhead_experiments, time_validation, write_results_csv,
)

SMALL = BenchSpec(n_blocks=30, tx_per_block=2, redaction_fraction=0.1, k=2, ell=3, rho=0.6, repetitions=2)


class TestBenchSpec:
    @pytest.mark.parametrize("fraction, expected", [(0.0, 0), (0.1, 10), (0.07, 7), (0.29, 29), (0.015, 1)])
    def test_redaction_count_is_floor(self, fraction, expected):
        assert BenchSpec(n_blocks=100, redaction_fraction=fraction).n_redactions == expected

    @pytest.mark.parametrize("fraction", [-0.1, 1.5, math.nan])
    def test_fraction_range(self, fraction):
        with pytest.raises(ValidationError):
            BenchSpec(redaction_fraction=fraction)

    def test_too_many_redactions(self):
        with pytest.raises(SpecInvalid):
            generate_chain(SMALL.copy(update={"redaction_fraction": 0.9}))


class TestGeneration:
    def test_ledger_chain(self, tmp_path):
        path = str(tmp_path / "small.jsonl")
        result = generate_chain(SMALL, path)
        assert len(result.redactions) == 3
        assert len(result.chain) == 30
        assert (tmp_path / "small.jsonl").exists()

    def test_generic_chain(self):
        result = generate_chain(SMALL.copy(update={"mode": ChainMode.SINGLE}))
        assert len(result.redactions) == 3
        assert all(result.chain.at(r.height).is_redacted() for r in result.redactions)

    def test_same_spec_same_chain(self):
        assert generate_chain(SMALL).chain == generate_chain(SMALL).chain


class TestTiming:
    def test_stats(self):
        chain = generate_chain(SMALL).chain
        stats = time_validation(chain, 3, REDACTABLE, SMALL.params)
        assert stats["valid"] and len(stats["runs_ms"]) == 3
        assert stats["mean_ms"] > 0 and stats["stddev_ms"] >= 0

    def test_immutable_validator_rejects_redactions(self):
        chain = generate_chain(SMALL).chain
        assert not time_validation(chain, 1, IMMUTABLE, SMALL.params)["valid"]
        zero = generate_chain(SMALL.copy(update={"redaction_fraction": 0.0})).chain
        assert time_validation(zero, 1, IMMUTABLE, SMALL.params)["valid"]

    def test_bad_arguments(self):
        chain = generate_chain(SMALL.copy(update={"redaction_fraction": 0.0})).chain
        with pytest.raises(SpecInvalid):
            time_validation(chain, 0, REDACTABLE, SMALL.params)
        with pytest.raises(SpecInvalid):
            time_validation(chain, 1, "fastest", SMALL.params)

    def test_bench_validate_with_baseline(self, tmp_path):
        path = str(tmp_path / "c.jsonl")
        generate_chain(SMALL, path)
        base = bench_validate(path, 2, IMMUTABLE, SMALL.params)
        result = bench_validate(path, 2, REDACTABLE, SMALL.params, baseline=base, name="redactable")
        assert result.valid and not base.valid
        assert result.baseline_name == base.name
        assert result.overhead_pct == pytest.approx((result.mean_ms - base.mean_ms) / base.mean_ms * 100)

    def test_corrupt_dump(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text("not json\n", encoding="utf-8")
        with pytest.raises(DumpCorrupt):
            bench_validate(str(path), 1)


class TestExperiments:
    def test_baselines_are_wired(self, tmp_path):
        base = BenchSpec(n_blocks=60, tx_per_block=1, k=2, ell=3, rho=0.6, repetitions=2)
        results = run_overhead_experiments(base, str(tmp_path), fractions=(0.05,), ells=(5, 10))
        by_name = {r.name: r for r in results}
        assert [r.experiment for r in results] == ["a", "a", "b", "c", "c"]
        assert by_name["zero:redactable"].baseline_name == "zero:immutable"
        assert by_name["fraction-0.05:redactable"].baseline_name == "zero:redactable"
        assert by_name["fraction-0.05:redactable"].config["n_redactions"] == 3
        assert by_name["ell-5:redactable"].overhead_pct == 0.0
        assert by_name["ell-10:redactable"].baseline_name == "ell-5:redactable"
        assert all(r.valid for r in results if r.validator == REDACTABLE)

    def test_results_csv(self, tmp_path):
        result = BenchResult(name="x", repetitions=1, runs_ms=[1.0], mean_ms=1.0, stddev_ms=0.0, valid=True,
                             config=SMALL.config_fields())
        path = str(tmp_path / "results.csv")
        frame = write_results_csv([result], path)
        assert list(frame.columns[-4:]) == CSV_METRIC_COLUMNS
        assert list(pd.read_csv(path).columns) == list(frame.columns)
        assert list(results_frame([]).columns) == CSV_METRIC_COLUMNS


class TestTrend:
    def test_linear(self):
        report = fit_overhead_trend([1, 2, 3, 4], [3, 5, 7, 9])
        assert report["slope"] == pytest.approx(2.0)
        assert report["intercept"] == pytest.approx(1.0)
        assert report["at_most_linear"]

    def test_quadratic_flagged(self):
        report = fit_overhead_trend([1, 2, 3, 4, 5], [10, 40, 90, 160, 250])
        assert not report["at_most_linear"]

    def test_two_points_fit_line_only(self):
        report = fit_overhead_trend([0, 1], [0, 1])
        assert report["quadratic"] is None and report["at_most_linear"]

    def test_needs_two_points(self):
        with pytest.raises(SpecInvalid):
            fit_overhead_trend([1], [1])

import pytest

from chansel.evaluators import OracleSpec, evaluate_oracle
from chansel.model import ChannelSubset, Montage
from chansel.report import (
    CountMode,
    EegnetArch,
    RunReport,
    eegnet_param_count,
    format_kilo,
    mask_wall_time,
    render_curve_csv,
    render_report,
)
from chansel.selectors import accuracy_curve, greedy_forward_search


def defaults(**kw):
    base = dict(c=22, t=1125)
    base.update(kw)
    return EegnetArch(**base)


class TestParamCount:
    def test_default_architecture_term_by_term(self):
        # 8*64 + 2*8 + 22*8*2 + 2*16 + 16*16 + 16*16 + 2*16 + 16*35*4 + 4
        assert eegnet_param_count(defaults()) == 3700

    def test_channel_difference_is_depthwise_only(self):
        drop = eegnet_param_count(defaults(c=22)) - eegnet_param_count(defaults(c=14))
        assert drop == (22 - 14) * 8 * 2 == 128

    def test_linear_in_channels(self):
        counts = [eegnet_param_count(defaults(c=c)) for c in range(1, 30)]
        slopes = {b - a for a, b in zip(counts, counts[1:])}
        assert slopes == {8 * 2}

    def test_batchnorm_mode_delta(self):
        delta = eegnet_param_count(defaults(count_mode=CountMode.ALL_BATCHNORM)) - \
            eegnet_param_count(defaults())
        assert delta == 2 * (8 + 8 * 2 + 16)

    def test_dense_term_uses_floored_pooling(self):
        # t=1125: 1125//4=281, 281//8=35 time points feeding the dense layer
        a = eegnet_param_count(defaults(t=1125))
        b = eegnet_param_count(defaults(t=1120))  # 1120//4//8 = 35 as well
        assert a == b

    def test_validation(self):
        with pytest.raises(ValueError):
            defaults(t=20, pool1=8, pool2=8)
        with pytest.raises(ValueError):
            defaults(f1=0)


class TestFormatKilo:
    def test_rounds_half_up(self):
        assert format_kilo(2625) == "2.63k"
        assert format_kilo(2500) == "2.50k"
        assert format_kilo(3700) == "3.70k"
        assert format_kilo(128) == "0.13k"
        assert format_kilo(4274) == "4.27k"


def tiny_run_report():
    spec = OracleSpec(ChannelSubset((1,)), 0.5, 0.2, 0.01)
    trace = greedy_forward_search(lambda s: evaluate_oracle(s, spec), 3)
    montage = Montage(("C3", "Cz", "C4"), 250.0)
    best = trace.steps[trace.best_step]
    return RunReport(
        method="greedy",
        dataset_path="toy.ets",
        dataset_digest="ab" * 32,
        evaluator_id="oracle:test",
        seed=0,
        trace=trace,
        curve=tuple(accuracy_curve(trace)),
        selected=best.subset,
        selected_accuracy=best.accuracy,
        montage=montage,
        total_evaluations=6,
        cache_hits=0,
        wall_time_ms=12,
    )


class TestRunReport:
    def test_selected_must_match_best_step(self):
        report = tiny_run_report()
        with pytest.raises(ValueError):
            RunReport(
                method=report.method,
                dataset_path=report.dataset_path,
                dataset_digest=report.dataset_digest,
                evaluator_id=report.evaluator_id,
                seed=0,
                trace=report.trace,
                curve=report.curve,
                selected=ChannelSubset((0,)),
                selected_accuracy=0.1,
                montage=report.montage,
                total_evaluations=6,
                cache_hits=0,
                wall_time_ms=1,
            )

    def test_render_contains_key_lines(self):
        text = render_report(tiny_run_report())
        assert text.startswith("chansel-report 1\n")
        assert "method: greedy\n" in text
        assert "selected_indices: 1\n" in text
        assert "selected_names: Cz\n" in text
        assert "accuracy_convention: fraction" in text
        assert "step 1: size=1" in text

    def test_wall_time_mask(self):
        a = render_report(tiny_run_report())
        b = a.replace("wall_time_ms: 12", "wall_time_ms: 9000")
        assert mask_wall_time(a) == mask_wall_time(b)

    def test_curve_csv_format(self):
        report = tiny_run_report()
        csv = render_curve_csv(report.curve, report.montage)
        lines = csv.splitlines()
        assert lines[0] == "size,accuracy,subset"
        assert lines[1] == "1,0.7000,Cz"
        # the subset column joins *sorted* names
        assert lines[2].startswith("2,") and "+" in lines[2]
        assert csv.endswith("\n") and "\r" not in csv

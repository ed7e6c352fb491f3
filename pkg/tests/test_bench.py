"""Benchmark records, summaries, and scenario presets."""

import json

import pytest

from edgevote.bench import (
    CSV_COLUMNS,
    BenchError,
    LinkSpec,
    NodeSpec,
    ScenarioConfig,
    TimingRecord,
    UnknownPreset,
    WriteFailure,
    format_summary,
    parse_records_csv,
    preset,
    report,
    summarize,
)


def rec(
    job_id="j1",
    scenario="s",
    arbitration_ms=2.0,
    latency_ms=10.0,
    execution_ms=5.0,
    response_ms=20.0,
    bytes_sent=100,
    bytes_received=200,
):
    return TimingRecord(
        job_id=job_id,
        scenario=scenario,
        arbitration_ms=arbitration_ms,
        latency_ms=latency_ms,
        execution_ms=execution_ms,
        response_ms=response_ms,
        bytes_sent=bytes_sent,
        bytes_received=bytes_received,
    )


class TestTimingRecord:
    def test_negative_timing_rejected(self):
        with pytest.raises(BenchError):
            rec(arbitration_ms=-1.0)

    def test_response_must_cover_parts(self):
        with pytest.raises(BenchError):
            rec(arbitration_ms=15.0, execution_ms=10.0, response_ms=20.0)

    def test_non_finite_rejected(self):
        with pytest.raises(BenchError):
            rec(latency_ms=float("nan"))

    def test_negative_bytes_rejected(self):
        with pytest.raises(BenchError):
            rec(bytes_sent=-1)

    def test_row_round_trip(self):
        r = rec(response_ms=17.25)
        text = ",".join(CSV_COLUMNS) + "\n" + ",".join(r.to_row()) + "\n"
        assert parse_records_csv(text) == [r]


class TestSummarize:
    def test_single_record(self):
        s = summarize([rec()])["s"]
        for metric in ("arbitration_ms", "latency_ms", "execution_ms", "response_ms"):
            assert s[metric]["mean"] == s[metric]["median"] == s[metric]["p95"]

    def test_known_values(self):
        records = [
            rec(job_id=f"j{i}", response_ms=v, latency_ms=0.0, arbitration_ms=0.0,
                execution_ms=0.0)
            for i, v in enumerate((10.0, 20.0, 30.0))
        ]
        s = summarize(records)["s"]["response_ms"]
        assert s["mean"] == 20.0
        assert s["median"] == 20.0
        assert s["p95"] == pytest.approx(29.0)

    def test_groups_by_scenario(self):
        records = [rec(scenario="a"), rec(scenario="b", response_ms=40.0)]
        s = summarize(records)
        assert set(s) == {"a", "b"}

    def test_empty_rejected(self):
        with pytest.raises(BenchError):
            summarize([])

    def test_format_contains_scenarios_and_metrics(self):
        text = format_summary([rec(scenario="edge")])
        assert "edge" in text
        assert "response_ms" in text
        assert "p95" in text


class TestReport:
    def test_writes_three_files(self, tmp_path):
        out = tmp_path / "records.csv"
        summary = report([rec()], out)
        assert out.exists()
        assert (tmp_path / "records.csv.summary.txt").exists()
        sidecar = json.loads((tmp_path / "records.csv.summary.json").read_text())
        assert sidecar == summary

    def test_csv_reparses_identically(self, tmp_path):
        records = [rec(job_id=f"j{i}", response_ms=20.0 + i / 7.0) for i in range(9)]
        out = tmp_path / "r.csv"
        report(records, out)
        assert parse_records_csv(out.read_text()) == records

    def test_bad_path_is_write_failure(self, tmp_path):
        with pytest.raises(WriteFailure):
            report([rec()], tmp_path / "missing-dir" / "r.csv")

    def test_empty_records_rejected(self, tmp_path):
        with pytest.raises(BenchError):
            report([], tmp_path / "r.csv")


class TestPresets:
    def test_two_node_layout(self):
        cfg = preset("a_b")
        assert len(cfg.nodes) == 2
        roles = sorted(spec.role for spec in cfg.nodes)
        assert roles == ["gateway", "master"]
        master = next(s for s in cfg.nodes if s.role == "master")
        assert len(master.colocated) == 3

    def test_four_node_layout(self):
        cfg = preset("a_bcd")
        assert len(cfg.nodes) == 4
        assert sum(1 for s in cfg.nodes if s.role == "worker") == 2
        assert not cfg.cloud_enabled

    def test_cloud_layout_has_two_hop_links(self):
        cfg = preset("a_cloud_bcd")
        heavy = [l for l in cfg.links if l.one_way_ms >= 40.0]
        assert heavy, "expected at least one 2-hop 20 ms link"
        for link in heavy:
            assert link.delay_ms == 20.0
            assert link.hops == 2
        assert any(l.one_way_ms == 0.0 for l in cfg.links), "cluster links are flat"

    def test_edge_presets_share_load_profiles(self):
        multi = preset("a_bcd")
        single = preset("a_b")
        worker_profiles = sorted(
            spec.load_profile for spec in multi.nodes if spec.role == "worker"
        )
        actor_profiles = sorted(
            profile
            for spec in single.nodes
            for _, profile in spec.colocated
        )
        master_actor = [
            profile
            for spec in multi.nodes
            if spec.role == "master"
            for _, profile in spec.colocated
        ]
        assert sorted(worker_profiles + master_actor) == sorted(actor_profiles)

    def test_unknown_preset(self):
        with pytest.raises(UnknownPreset):
            preset("a_b_c_d_e")

    def test_delay_map(self):
        cfg = preset("a_bcd")
        gw = next(s for s in cfg.nodes if s.role == "gateway")
        delays = cfg.delay_map_for(gw.node_id)
        assert delays, "gateway should have outgoing delays"
        assert all(v == 5.0 for v in delays.values())


class TestScenarioValidation:
    def nodes(self):
        return (
            NodeSpec("gw", "gateway"),
            NodeSpec("m", "master"),
        )

    def test_requires_a_gateway(self):
        with pytest.raises(BenchError):
            ScenarioConfig(name="x", nodes=(NodeSpec("m", "master"),))

    def test_requires_exactly_one_master(self):
        with pytest.raises(BenchError):
            ScenarioConfig(
                name="x",
                nodes=self.nodes() + (NodeSpec("m2", "master"),),
            )

    def test_negative_delay_rejected(self):
        with pytest.raises(BenchError):
            ScenarioConfig(
                name="x", nodes=self.nodes(),
                links=(LinkSpec("gw", "m", delay_ms=-1.0),),
            )

    def test_zero_reps_rejected(self):
        with pytest.raises(BenchError):
            ScenarioConfig(name="x", nodes=self.nodes(), repetitions=0)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(BenchError):
            ScenarioConfig(
                name="x",
                nodes=self.nodes() + (NodeSpec("gw", "worker"),),
            )

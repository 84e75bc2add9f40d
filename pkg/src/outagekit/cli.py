"""Command line entry points."""

from __future__ import annotations

import json
import os

import click

from .config import PipelineConfig, load_config
from .gateway import make_gateway
from .replay_eval import (
    build_ground_truth,
    evaluate_corpus,
    export_coverage,
    generate_corpus,
    load_trace,
    save_trace,
)


def _load_cfg(config_path: str | None) -> PipelineConfig:
    if config_path:
        return load_config(config_path)
    return load_config(None)


@click.group()
def main():
    """Outage pipeline tooling: corpus generation, replay, evaluation,
    coverage export, and the HTTP service."""


@main.command("gen-corpus")
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--n-traces", "-n", type=int, default=4, show_default=True)
@click.option("--profile", default="mixed", show_default=True)
@click.option("--out-dir", type=click.Path(), required=True)
def gen_corpus(seed, n_traces, profile, out_dir):
    """Generate synthetic incident traces."""
    os.makedirs(out_dir, exist_ok=True)
    traces = generate_corpus(seed, n_traces, profile=profile)
    for trace in traces:
        path = os.path.join(out_dir, f"{trace.trace_id}.jsonl")
        save_trace(trace, path)
        click.echo(f"wrote {path} ({len(trace.signals)} signals)")


@main.command("build-gt")
@click.option("--trace", "trace_path", type=click.Path(exists=True), required=True)
@click.option("--label-file", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def build_gt(trace_path, label_file, out_path, config_path):
    """Extract and reconcile the ground-truth action set for one trace."""
    cfg = _load_cfg(config_path)
    gateway = make_gateway(cfg.provider)
    trace = load_trace(trace_path)
    actions = build_ground_truth(trace, gateway, label_file=label_file)
    with open(out_path, "w", encoding="utf-8") as fh:
        for action in actions:
            fh.write(json.dumps(action.to_dict(), sort_keys=True) + "\n")
    click.echo(f"wrote {out_path} ({len(actions)} actions)")


@main.command("replay")
@click.option("--corpus-dir", type=click.Path(exists=True), required=True)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--coverage/--no-coverage", default=True, show_default=True)
def replay(corpus_dir, out_dir, config_path, coverage):
    """Replay a corpus, score it against G1/G2, and write reports."""
    cfg = _load_cfg(config_path)
    os.makedirs(out_dir, exist_ok=True)
    traces = [
        load_trace(os.path.join(corpus_dir, name))
        for name in sorted(os.listdir(corpus_dir))
        if name.endswith(".jsonl")
    ]
    if not traces:
        raise click.ClickException(f"no trace files in {corpus_dir}")
    evaluation = evaluate_corpus(traces, config=cfg)

    with open(os.path.join(out_dir, "recommendations.jsonl"), "w",
              encoding="utf-8") as fh:
        for outcome in evaluation.outcomes:
            for rec in outcome.recommendations:
                row = {"trace_id": outcome.trace_id}
                row.update(rec.to_dict())
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    with open(os.path.join(out_dir, "report_g1.json"), "w", encoding="utf-8") as fh:
        fh.write(evaluation.report_g1.to_json())
    with open(os.path.join(out_dir, "report_g2.json"), "w", encoding="utf-8") as fh:
        fh.write(evaluation.report_g2.to_json())

    if coverage:
        gateway = make_gateway(cfg.provider)
        from .memory import KcaStore
        from .memory.consolidate import Consolidator, PlaybookDoc
        from .replay_eval import PLAYBOOKS
        store = KcaStore(gateway)
        distiller = Consolidator(gateway, store, dedup_threshold=cfg.dedup_threshold)
        for doc_id, doc in sorted(PLAYBOOKS.items()):
            distiller.distill_playbook(PlaybookDoc(
                doc_id=doc_id, body=doc["body"], title=doc["title"],
                service=doc["service"],
            ))
        predicted = [r for o in evaluation.outcomes for r in o.recommendations]
        gts = [g for gs in sorted(evaluation.ground_truth.items())
               for g in gs[1]]
        n = export_coverage(predicted, gts, store, gateway,
                            os.path.join(out_dir, "coverage.jsonl"))
        click.echo(f"coverage rows: {n}")

    p1 = evaluation.report_g1.precision
    r1 = evaluation.report_g1.recall
    p2 = evaluation.report_g2.precision
    r2 = evaluation.report_g2.recall
    click.echo(f"G1 precision={p1} recall={r1}")
    click.echo(f"G2 precision={p2} recall={r2}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--topology", "topology_path", type=click.Path(exists=True),
              default=None)
@click.option("--data-dir", type=click.Path(), default=None)
def serve(host, port, config_path, topology_path, data_dir):
    """Run the HTTP service."""
    import uvicorn

    from .orchestrator import Orchestrator
    from .perception import Topology
    from .replay_eval import default_topology
    from .service import create_app

    cfg = _load_cfg(config_path)
    topology = (Topology.load(topology_path) if topology_path
                else default_topology())
    orchestrator = Orchestrator(topology, config=cfg, data_dir=data_dir)
    uvicorn.run(create_app(orchestrator), host=host, port=port)


if __name__ == "__main__":
    main()

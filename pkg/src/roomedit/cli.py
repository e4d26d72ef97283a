"""Command-line interface.

Report-producing paths write a figure next to every delimited output:
dataset stats get a bar chart, training writes the loss-curve CSV plus its
plot, sampling renders top-down scene views (and the denoising trace grid
when requested), and evaluation renders the metric bars.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from .catalog import default_catalog, load_catalog, save_catalog
from .datagen import GenConfig, build_dataset, load_pairs, sample_toy_scenes
from .sceneio import load_scene, save_scene


@click.group()
def main():
    """Language-guided 3D room layout editing toolkit."""


def _load_catalog_opt(path):
    return load_catalog(path) if path else default_catalog()


def _load_scene_dir(directory, catalog):
    from .sceneio import load_scene as load_one

    scenes = []
    for name in sorted(os.listdir(directory)):
        if name.endswith(".json"):
            scenes.append(load_one(os.path.join(directory, name), catalog))
    if not scenes:
        raise click.ClickException(f"no .json scenes under {directory}")
    return scenes


@main.command("datagen")
@click.option("--scenes", "scenes_dir", type=click.Path(exists=True), help="directory of scene files")
@click.option("--toy", "toy_count", type=int, help="sample N procedural toy rooms instead")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--types", default="translate,rotate,scale,add,remove,replace", show_default=True)
@click.option("--per-scene", default=1, show_default=True, help="generation attempts per scene per type")
@click.option("--seed", default=0, show_default=True)
@click.option("--room-type", default="toy", show_default=True)
@click.option("--objects", nargs=2, type=int, default=(3, 5), show_default=True)
@click.option("--duplicates", is_flag=True, help="allow duplicate prototypes per room")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True))
@click.option("--naturalize", is_flag=True, help="ask the configured LLM for natural commands")
def datagen_cmd(scenes_dir, toy_count, out_dir, types, per_scene, seed, room_type,
                objects, duplicates, catalog_path, naturalize):
    """Generate an editing-pair dataset (pairs.jsonl + stats + figures)."""
    catalog = _load_catalog_opt(catalog_path)
    if bool(scenes_dir) == bool(toy_count):
        raise click.ClickException("pass exactly one of --scenes or --toy")
    if scenes_dir:
        scenes = _load_scene_dir(scenes_dir, catalog)
    else:
        scenes = sample_toy_scenes(
            catalog, toy_count, seed=seed, room_type=room_type,
            n_objects=tuple(objects), distinct=not duplicates,
        )
    config = GenConfig(
        attempts=per_scene,
        types=tuple(t.strip() for t in types.split(",") if t.strip()),
        seed=seed,
    )
    llm_client = None
    if naturalize:
        from .llm import LlmClient, LlmConfig

        llm_config = LlmConfig.from_env()
        if llm_config is None:
            click.echo("naturalize: no EDITROOM_LLM_URL configured; using offline mode")
        else:
            llm_client = LlmClient(llm_config)
        if llm_client is None:
            class _Offline:
                offline = True

            llm_client = _Offline()
    stats = build_dataset(scenes, catalog, config, out_dir, llm_client=llm_client)
    from .plots import save_dataset_stats

    save_dataset_stats(stats, os.path.join(out_dir, "stats.png"))
    click.echo(f"wrote {stats['total']} pairs to {out_dir}")
    for split, info in stats["splits"].items():
        click.echo(f"  {split}: {info['count']}")


def _train(kind, data, catalog_path, out, steps, batch_size, lr, seed, timesteps, d, layers):
    from .diffusion.data import TrainingSet
    from .diffusion.training import (
        TrainConfig,
        save_checkpoint,
        train,
        write_loss_curve,
    )
    from .plots import save_loss_curve

    catalog_file = catalog_path or os.path.join(data, "catalog.json")
    catalog = load_catalog(catalog_file) if os.path.exists(catalog_file) else default_catalog()
    pairs_file = data if data.endswith(".jsonl") else os.path.join(data, "train", "pairs.jsonl")
    pairs = load_pairs(pairs_file, catalog)
    click.echo(f"training on {len(pairs)} pairs from {pairs_file}")
    dataset = TrainingSet.from_pairs(pairs, catalog)
    config = TrainConfig(
        kind=kind, steps=steps, batch_size=batch_size, lr=lr, seed=seed,
        timesteps=timesteps, d=d, n_layers=layers,
    )
    trainer = train(dataset, config, progress=lambda s, l: click.echo(f"  step {s}: loss {l:.5f}"))
    save_checkpoint(out, trainer)
    base = out[:-4] if out.endswith(".npz") else out
    write_loss_curve(base + "_loss.csv", trainer.loss_curve)
    save_loss_curve(trainer.loss_curve, base + "_loss.png", title=f"{kind} loss")
    click.echo(f"saved checkpoint {out} (+ loss curve CSV/PNG)")


_train_options = [
    click.option("--data", required=True, type=click.Path(exists=True),
                 help="dataset directory (or a pairs.jsonl)"),
    click.option("--catalog", "catalog_path", type=click.Path(exists=True)),
    click.option("--out", required=True, type=click.Path()),
    click.option("--steps", default=4000, show_default=True),
    click.option("--batch-size", default=32, show_default=True),
    click.option("--lr", default=1e-3, show_default=True),
    click.option("--seed", default=0, show_default=True),
    click.option("--timesteps", default=100, show_default=True),
    click.option("--width", "d", default=64, show_default=True),
    click.option("--layers", default=2, show_default=True),
]


def _apply_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@main.command("train-graph")
@_apply_options(_train_options)
def train_graph_cmd(data, catalog_path, out, steps, batch_size, lr, seed, timesteps, d, layers):
    """Train the discrete target-graph denoiser."""
    _train("graph", data, catalog_path, out, steps, batch_size, lr, seed, timesteps, d, layers)


@main.command("train-layout")
@_apply_options(_train_options)
def train_layout_cmd(data, catalog_path, out, steps, batch_size, lr, seed, timesteps, d, layers):
    """Train the continuous target-layout denoiser."""
    _train("layout", data, catalog_path, out, steps, batch_size, lr, seed, timesteps, d, layers)


@main.command("sample")
@click.option("--source", required=True, type=click.Path(exists=True), help="source scene file")
@click.option("--command", "command_text", required=True, help="template command to execute")
@click.option("--graph-ckpt", required=True, type=click.Path(exists=True))
@click.option("--layout-ckpt", required=True, type=click.Path(exists=True))
@click.option("--catalog", "catalog_path", type=click.Path(exists=True))
@click.option("--out", default="edited_scene.json", show_default=True)
@click.option("--trace", "trace_path", type=click.Path(), help="write the per-step layout trace JSONL")
@click.option("--seed", default=0, show_default=True)
def sample_cmd(source, command_text, graph_ckpt, layout_ckpt, catalog_path, out, trace_path, seed):
    """Edit a scene with the trained diffusion editor."""
    from .diffusion.sampling import edit_with_diffusion
    from .diffusion.training import load_checkpoint, schedule_from_doc
    from .plots import save_edit_pair

    catalog = _load_catalog_opt(catalog_path)
    scene = load_scene(source, catalog)
    graph_params, graph_config, graph_meta = load_checkpoint(graph_ckpt)
    layout_params, layout_config, layout_meta = load_checkpoint(layout_ckpt)
    rng = np.random.default_rng(seed)
    edited, trace = edit_with_diffusion(
        scene, command_text,
        graph_params, graph_config, layout_params, layout_config, catalog, rng,
        graph_schedule=schedule_from_doc(graph_meta["schedule"]),
        layout_schedule=schedule_from_doc(layout_meta["schedule"]),
        want_trace=bool(trace_path),
    )
    save_scene(edited, catalog, out)
    base = out[:-5] if out.endswith(".json") else out
    save_edit_pair(scene, edited, base + ".png", title=command_text[:40])
    click.echo(f"wrote {out} and {base}.png")
    if trace_path:
        from .plots import save_denoise_trace
        from .scene import extract_scene_graph

        with open(trace_path, "w", encoding="utf-8") as fh:
            for step, frame in enumerate(trace):
                fh.write(json.dumps({"step": step, "rows": frame.tolist()}))
                fh.write("\n")
        # Trace rows follow the sampled target graph's slots; approximate the
        # real mask by nonzero rows of the final frame.
        mask = np.any(trace[-1] != 0.0, axis=1)
        trace_png = trace_path + ".png" if not trace_path.endswith(".jsonl") else trace_path[:-6] + ".png"
        save_denoise_trace(trace, mask, scene.room_bounds, trace_png)
        click.echo(f"wrote {trace_path} ({len(trace)} states) and {trace_png}")


@main.command("eval")
@click.option("--pred", required=True, type=click.Path(exists=True))
@click.option("--target", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--table", "table_path", type=click.Path())
@click.option("--catalog", "catalog_path", type=click.Path(exists=True))
@click.option("--same-category-only", is_flag=True, help="restrict matching to same-category pairs")
def eval_cmd(pred, target, report_path, table_path, catalog_path, same_category_only):
    """Evaluate predicted scenes against a dataset split (IOU / S-IOU)."""
    from .evaluation import evaluate, write_report
    from .plots import save_metrics_report

    catalog = _load_catalog_opt(catalog_path)
    report = evaluate(pred, target, catalog, same_category_only=same_category_only)
    write_report(report, report_path, table_path)
    base = report_path[:-5] if report_path.endswith(".json") else report_path
    save_metrics_report(report.to_doc(), base + ".png")
    doc = report.to_doc()
    click.echo(
        f"evaluated {doc['overall']['count']} pairs: "
        f"IOU {doc['overall']['iou']:.4f} S-IOU {doc['overall']['s_iou']:.4f}"
    )
    if doc["missing_predictions"]:
        click.echo(f"missing predictions: {len(doc['missing_predictions'])}")


@main.command("plan")
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--command", "command_text", required=True)
@click.option("--backend", type=click.Choice(["rules", "llm"]), default="rules", show_default=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True))
def plan_cmd(scene_path, command_text, backend, catalog_path):
    """Break a natural command into template commands (one per line)."""
    from .parameterizer import NoValidCommands, Unparseable, parameterize

    catalog = _load_catalog_opt(catalog_path)
    scene = load_scene(scene_path, catalog)
    try:
        plan = parameterize(scene, command_text, catalog, backend=backend)
    except (Unparseable, NoValidCommands) as exc:
        raise click.ClickException(str(exc))
    for line in plan.template_lines():
        click.echo(line)


@main.command("serve")
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True))
@click.option("--graph-ckpt", type=click.Path(exists=True))
@click.option("--layout-ckpt", type=click.Path(exists=True))
@click.option("--snapshot-dir", type=click.Path())
def serve_cmd(port, host, catalog_path, graph_ckpt, layout_ckpt, snapshot_dir):
    """Run the HTTP editing-session service."""
    import uvicorn

    from .service import DiffusionBundle, SessionService, create_app

    catalog = _load_catalog_opt(catalog_path)
    diffusion = None
    if graph_ckpt and layout_ckpt:
        from .diffusion.training import load_checkpoint

        graph_params, graph_config, _ = load_checkpoint(graph_ckpt)
        layout_params, layout_config, _ = load_checkpoint(layout_ckpt)
        diffusion = DiffusionBundle(graph_params, graph_config, layout_params, layout_config)
    elif graph_ckpt or layout_ckpt:
        raise click.ClickException("diffusion mode needs both --graph-ckpt and --layout-ckpt")
    service = SessionService(catalog=catalog, diffusion=diffusion, snapshot_dir=snapshot_dir)
    app = create_app(service)
    uvicorn.run(app, host=host, port=port)


@main.command("make-catalog")
@click.option("--out", required=True, type=click.Path())
def make_catalog_cmd(out):
    """Write the built-in toy object catalog to a file."""
    save_catalog(default_catalog(), out)
    click.echo(f"wrote {out}")


@main.command("make-scene")
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--room-type", default="toy", show_default=True)
@click.option("--objects", nargs=2, type=int, default=(3, 5), show_default=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True))
def make_scene_cmd(out, seed, room_type, objects, catalog_path):
    """Sample one procedural scene and write it (plus a top-down PNG)."""
    from .plots import save_scene_topdown

    catalog = _load_catalog_opt(catalog_path)
    scenes = sample_toy_scenes(catalog, 1, seed=seed, room_type=room_type, n_objects=tuple(objects))
    save_scene(scenes[0], catalog, out)
    base = out[:-5] if out.endswith(".json") else out
    save_scene_topdown(scenes[0], base + ".png")
    click.echo(f"wrote {out} and {base}.png")


if __name__ == "__main__":
    main()

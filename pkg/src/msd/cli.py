"""Command-line entry points for the skeletal-diagram toolkit."""

from __future__ import annotations

import json
import sys

import click
import numpy as np


@click.group()
def main():
    """Medial skeletal diagram toolkit."""


@main.command()
@click.option("--mesh", "mesh_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Target surface mesh (OBJ or OFF).")
@click.option("--medial", "medial_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Medial mesh (extended OFF with edges and vertices).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False),
              help="Output document path.")
@click.option("--delta", default=0.01, show_default=True,
              help="Coverage tolerance.")
@click.option("--init-k", default=10, show_default=True,
              help="Initial candidate-site count.")
@click.option("--n-insert", default=3, show_default=True,
              help="Sites inserted per uncovered region.")
@click.option("--max-iters", default=300, show_default=True,
              help="Optimizer iteration budget.")
@click.option("--fit-resolution", default="low", show_default=True,
              type=click.Choice(["high", "mid", "low", "min"]),
              help="Canonical boundary resolution used while fitting.")
@click.option("--normalize", is_flag=True,
              help="Scale the target into the unit box before processing.")
@click.option("--refine", is_flag=True,
              help="Run exact refinement on the fitted primitives.")
def build(mesh_path, medial_path, out_path, delta, init_k, n_insert,
          max_iters, fit_resolution, normalize, refine):
    """Optimize a skeleton on the medial mesh and write a document."""
    from .pipeline import PipelineConfig, run_pipeline

    config = PipelineConfig(
        mesh_path=mesh_path, medial_path=medial_path, out_path=out_path,
        normalize=normalize, delta=delta, init_count=init_k,
        n_insert=n_insert, max_iterations=max_iters,
        fit_resolution=fit_resolution, refine=refine,
    )

    def progress(phase, fraction, extra):
        if extra and "iteration" in extra:
            click.echo(
                f"  iter {extra['iteration']:4d}  "
                f"energy {extra['total']:.6f}  best {extra['best_total']:.6f}"
            )
        else:
            click.echo(f"[{phase}] {fraction:.0%}")

    doc = run_pipeline(config, progress=progress)
    e = doc.metadata["energies"]
    click.echo(
        f"done: {len(doc.primitives)} primitives, "
        f"coverage {e['coverage']:.4f}, total energy {e['total']:.6f}"
    )
    click.echo(f"wrote {out_path}")


@main.command()
@click.argument("document", type=click.Path(exists=True, dir_okay=False))
@click.option("--delta", default=0.01, show_default=True)
@click.option("--threshold", default=5e-3, show_default=True,
              help="Short-edge cleanup threshold.")
def refine(document, delta, threshold):
    """Exactly refine every primitive in DOCUMENT (updated in place)."""
    from .document import load_document, save_document
    from .pipeline import refine_document_primitives

    doc = load_document(document)
    report = refine_document_primitives(doc, delta=delta, threshold=threshold)
    save_document(doc, document)
    click.echo(
        f"refined {len(report['refined'])}/{len(doc.primitives)} primitives"
    )
    for k, reason in report["skipped"]:
        click.echo(f"  skipped primitive {k}: {reason}", err=True)


@main.command()
@click.argument("document", type=click.Path(exists=True, dir_okay=False))
@click.option("--combine", default="sum", show_default=True,
              type=click.Choice(["sum", "mean"]))
def metrics(document, combine):
    """Reconstruction error of DOCUMENT against its target mesh."""
    from .document import load_document
    from .mesh import load_mesh
    from .metrics import UnionField, error_metrics
    from .pipeline import document_primitives

    doc = load_document(document)
    target = load_mesh(doc.target_path)
    field = UnionField(document_primitives(doc))
    report = error_metrics(target, field, combine=combine)
    click.echo(json.dumps({
        "eps_target_to_recon": report.eps1,
        "eps_recon_to_target": report.eps2,
        "eps": report.eps,
        "hausdorff": report.hausdorff,
        "elements": len(doc.primitives),
    }, indent=2))


@main.command()
@click.argument("document", type=click.Path(exists=True, dir_okay=False))
@click.option("--grid", default=64, show_default=True,
              help="Marching-cubes grid resolution.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              help="Output mesh path (default: DOCUMENT base + .recon.obj).")
def reconstruct(document, grid, out_path):
    """Extract the union surface of DOCUMENT's primitives."""
    from .document import load_document
    from .mesh import save_mesh
    from .metrics import UnionField, extract_union_mesh
    from .pipeline import document_primitives

    doc = load_document(document, verify_target=False)
    field = UnionField(document_primitives(doc))
    mesh = extract_union_mesh(field, grid)
    if out_path is None:
        base = document[:-4] if document.endswith(".msd") else document
        out_path = base + ".recon.obj"
    save_mesh(mesh, out_path)
    click.echo(
        f"wrote {out_path} ({mesh.n_vertices} vertices, "
        f"{mesh.n_triangles} triangles)"
    )


@main.command()
@click.argument("problem_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--max-iters", default=30, show_default=True)
@click.option("--step", default=0.1, show_default=True,
              help="Initial gradient-descent step scale.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              help="Write the optimized skeleton DOFs as JSON.")
def shapeopt(problem_file, max_iters, step, out_path):
    """Optimize a skeletal structure for compliance under load."""
    from .shapeopt import load_problem, optimize_shape

    problem = load_problem(problem_file)
    x, trace = optimize_shape(problem, max_iterations=max_iters, step0=step)
    first, last = trace[0], trace[-1]
    click.echo(
        f"{len(trace) - 1} accepted steps: compliance "
        f"{first.compliance:.6g} -> {last.compliance:.6g}, "
        f"volume penalty {last.volume_penalty:.6g}"
    )
    if out_path:
        v, vr, er = problem.unpack(x)
        with open(out_path, "w") as f:
            json.dump({
                "vertices": v.tolist(),
                "vertex_radii": vr.tolist(),
                "edges": [list(e) for e in problem.edges],
                "edge_radii": er.tolist(),
                "trace": [[t.iteration, t.total, t.compliance,
                           t.volume_penalty] for t in trace],
            }, f, indent=2)
        click.echo(f"wrote {out_path}")


@main.command()
@click.option("--port", default=8787, show_default=True)
@click.option("--bind", default="127.0.0.1", show_default=True)
@click.option("--state", "state_dir", default="./state", show_default=True,
              type=click.Path(file_okay=False),
              help="Directory holding meshes, documents, and drafts.")
@click.option("--mesh", "mesh_path", type=click.Path(exists=True, dir_okay=False),
              help="Target mesh (default: target.obj/off in the state dir).")
@click.option("--medial", "medial_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Medial mesh (default: medial.off in the state dir).")
def serve(port, bind, state_dir, mesh_path, medial_path):
    """Run the HTTP service for the browser editor."""
    from .server import serve as run_server

    run_server(bind, port, state_dir, mesh_path, medial_path)


if __name__ == "__main__":
    sys.exit(main())

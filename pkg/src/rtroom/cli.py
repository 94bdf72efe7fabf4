"""Batch command-line interface.

    rtroom machines list
    rtroom ct reconstruct STACK_DIR --iso -300 --decimate 20000 -o skin.stl
    rtroom scenario run FILE [--json]
    rtroom scenario suite DIR
    rtroom serve --port 8000 --machines DIR
"""

from __future__ import annotations

import json as jsonlib
import sys
from pathlib import Path

import click

from .ct import DEFAULT_SKIN_ISO, load_slice_stack, marching_cubes, largest_component
from .decimate import decimate
from .meshio import write_mesh
from .scenario import MachineCatalog, load_scenario, run_scenario, run_suite


def _catalog(machines_dir: str | None) -> MachineCatalog:
    if machines_dir:
        return MachineCatalog.from_directory(machines_dir)
    return MachineCatalog()


@click.group()
def main():
    """Radiotherapy room simulator: machines, CT reconstruction, scenarios."""


@main.group()
def machines():
    """Machine catalog operations."""


@machines.command("list")
@click.option("--machines-dir", "machines_dir", type=click.Path(exists=True),
              default=None, help="Load machine files from a directory instead of the built-ins.")
def machines_list(machines_dir):
    """Print the available machine ids."""
    for name in _catalog(machines_dir).names():
        click.echo(name)
    click.echo("ellipse-phantom (phantom)")


@main.group()
def ct():
    """CT slice-stack processing."""


@ct.command("reconstruct")
@click.argument("stack", type=click.Path(exists=True, file_okay=False))
@click.option("--iso", default=DEFAULT_SKIN_ISO, show_default=True,
              help="Isosurface value selecting the skin.")
@click.option("--decimate", "target", type=int, default=None,
              help="Decimate the surface to this triangle budget.")
@click.option("--keep-fragments", is_flag=True,
              help="Keep all surface components (default keeps only the largest).")
@click.option("-o", "--output", type=click.Path(), required=True,
              help="Output mesh file (.stl or .obj).")
def ct_reconstruct(stack, iso, target, keep_fragments, output):
    """Reconstruct the patient surface from a slice stack."""
    grid = load_slice_stack(stack)
    surf = marching_cubes(grid, iso, source=str(stack))
    if surf.mesh.n_triangles == 0:
        raise click.ClickException(f"empty isosurface: {surf.empty_reason}")
    if not keep_fragments:
        surf = largest_component(surf)
    if target is not None and target < surf.mesh.n_triangles:
        surf = decimate(surf, target)
    write_mesh(surf.mesh, output)
    mesh = surf.mesh
    vol_cm3 = mesh.volume() / 1000.0
    click.echo(f"wrote {output}: {mesh.n_triangles} triangles, "
               f"{len(mesh.vertices)} vertices, volume {vol_cm3:.1f} cm^3, "
               f"watertight={mesh.is_watertight()}")


@main.group()
def scenario():
    """Scenario replay and regression."""


@scenario.command("run")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Emit the full result as JSON.")
@click.option("--machines-dir", "machines_dir", type=click.Path(exists=True), default=None)
def scenario_run(file, as_json, machines_dir):
    """Replay one scenario file; exit nonzero on deviation from expectations."""
    result = run_scenario(load_scenario(file), _catalog(machines_dir),
                          base_dir=Path(file).parent)
    if as_json:
        click.echo(jsonlib.dumps(result.to_dict(), indent=2))
    else:
        for r in result.reports:
            flag = "COLLIDING" if r.colliding else f"{r.distance_mm / 10.0:.2f} cm"
            click.echo(f"{r.source} x {r.target}: {flag}")
        for r in result.beam_reports:
            flag = "INTERSECTS" if r.colliding else "clear"
            click.echo(f"beam x {r.target}: {flag}")
        for name, mm in result.probe_readings_mm.items():
            click.echo(f"probe {name}: {mm / 10.0:.2f} cm")
        for dev in result.deviations:
            click.echo(f"DEVIATION: {dev}")
    sys.exit(0 if result.passed else 1)


@scenario.command("suite")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--machines-dir", "machines_dir", type=click.Path(exists=True), default=None)
def scenario_suite(directory, machines_dir):
    """Replay every scenario in a directory; exit nonzero on any deviation."""
    results = run_suite(directory, _catalog(machines_dir))
    failures = 0
    for res in results:
        status = "ok" if res.passed else "FAIL"
        click.echo(f"{status:4s} {res.scenario.name}")
        for dev in res.deviations:
            click.echo(f"     {dev}")
        failures += 0 if res.passed else 1
    click.echo(f"{len(results) - failures}/{len(results)} scenarios passed")
    sys.exit(0 if failures == 0 else 1)


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--machines", "machines_dir", type=click.Path(exists=True), default=None,
              help="Machine-file directory (defaults to the built-in machines).")
@click.option("--detail", default=1.0, show_default=True,
              help="Mesh tessellation density scale.")
@click.option("--scenario-dir", type=click.Path(), default=None)
@click.option("--static-dir", type=click.Path(), default=None,
              help="Serve a built web UI from this directory.")
def serve(port, host, machines_dir, detail, scenario_dir, static_dir):
    """Run the HTTP service."""
    import uvicorn

    from .server import create_app
    app = create_app(_catalog(machines_dir), detail=detail,
                     scenario_dir=scenario_dir, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()

"""Instance files: one ``.npz`` container with samples, model data, atoms and x0.

Layout (all arrays 64-bit, row-major):

* ``format`` -- the string ``"osmm-instance/1"``
* ``meta`` -- JSON text with the generator name, sizes, seed and parameters
* ``samples``, ``weights`` (optional) -- the sample matrix and its weights
* ``val_samples``, ``val_weights`` (optional) -- validation samples
* ``param/<key>`` -- model data needed to rebuild the oracle
* ``g/<field>`` -- the atoms of the structured part (``g/hinge/<field>`` for
  the hinge budget)
* ``x0`` -- the starting point

Loading rebuilds the oracle from samples and model data with the same
builder the generator used, then restores the stored ``g`` and ``x0``.
"""

import json

import numpy as np

from ..structured import HingeBudget, StructuredFunction
from .base import ProblemInstance, SampleSet

FORMAT = "osmm-instance/1"
G_FIELDS = ("c", "F", "lower", "upper", "nonneg", "simplex", "A_eq", "b_eq",
            "C_ineq", "d_ineq", "l1_index", "l1_radius")
HINGE_FIELDS = ("index", "a", "knot", "cap", "kappa", "weight")


def save_instance(path, inst: ProblemInstance):
    arrays = {"format": np.array(FORMAT), "x0": inst.x0,
              "meta": np.array(json.dumps(inst.metadata, sort_keys=True))}
    if inst.samples is not None:
        arrays["samples"] = inst.samples.matrix
        if inst.samples.weights is not None:
            arrays["weights"] = inst.samples.weights
    if inst.validation_samples is not None:
        arrays["val_samples"] = inst.validation_samples.matrix
        if inst.validation_samples.weights is not None:
            arrays["val_weights"] = inst.validation_samples.weights
    for key, val in inst.params.items():
        arrays[f"param/{key}"] = np.asarray(val)
    g = inst.g
    arrays["g/n"] = np.array(g.n)
    for name in G_FIELDS:
        val = getattr(g, name)
        if val is not None:
            arrays[f"g/{name}"] = np.asarray(val)
    if g.hinge is not None:
        for name in HINGE_FIELDS:
            arrays[f"g/hinge/{name}"] = np.asarray(getattr(g.hinge, name))
    np.savez(path, **arrays)


def _scalar(a):
    return a.item() if a.ndim == 0 else a


def load_instance(path) -> ProblemInstance:
    from . import BUILDERS

    with np.load(path, allow_pickle=False) as data:
        if str(data["format"]) != FORMAT:
            raise ValueError(f"unsupported instance format {data['format']}")
        files = set(data.files)
        meta = json.loads(str(data["meta"]))
        seed = meta.get("seed")
        samples = SampleSet(data["samples"], data["weights"] if "weights" in files else None, seed)
        twin = None
        if "val_samples" in files:
            twin = SampleSet(data["val_samples"],
                             data["val_weights"] if "val_weights" in files else None,
                             None if seed is None else seed + 1)
        params = {k[len("param/"):]: _scalar(data[k]) for k in files if k.startswith("param/")}
        kwargs = {name: _scalar(data[f"g/{name}"]) for name in G_FIELDS if f"g/{name}" in files}
        if "g/hinge/index" in files:
            kwargs["hinge"] = HingeBudget(**{name: _scalar(data[f"g/hinge/{name}"])
                                             for name in HINGE_FIELDS})
        g = StructuredFunction(int(data["g/n"]), **kwargs)
        x0 = data["x0"].copy()
    inst = BUILDERS[meta["name"]](samples, params, twin, meta)
    inst.g, inst.x0 = g, x0
    return inst

"""Closed-form data presets and seeded random fields on a grid."""

import numpy as np

from .exceptions import ConfigurationError

PRESETS = ("const", "step", "sin", "cos", "linear", "random", "file")


def random_field(grid, rng, amplitude=20.0, n_modes=4):
    """Smooth sign-mixed field: a random constant plus a few low Fourier modes."""
    X = grid.coords
    out = np.full(grid.n_nodes, rng.uniform(-0.5, 0.5))
    ks = range(0, n_modes + 1)
    if grid.dim == 1:
        for k in range(1, n_modes + 1):
            out += rng.normal() / k * np.cos(k * np.pi * X[:, 0] + rng.uniform(0, np.pi))
    else:
        for kx in ks:
            for ky in ks:
                if kx == ky == 0:
                    continue
                amp = rng.normal() / (1 + kx + ky)
                out += amp * np.cos(kx * np.pi * X[:, 0] + rng.uniform(0, np.pi)) * np.cos(
                    ky * np.pi * X[:, 1] + rng.uniform(0, np.pi)
                )
    return amplitude * out


def evaluate_preset(spec, coords, rng=None):
    """Evaluate ``"name:arg1,arg2"`` at the rows of ``coords``.

    ``const:c``, ``step:left,right,x0`` (``left`` where x <= x0),
    ``sin:amp,k`` / ``cos:amp,k`` (``amp * sin(k pi x)``), ``linear:a,b``
    (``a + b x``), ``random:amp`` (iid normal, needs ``rng``) and
    ``file:path`` (one value per line).
    """
    spec = str(spec).strip()
    name, _, argstr = spec.partition(":")
    name = name.strip().lower()
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    n = coords.shape[0]
    x = coords[:, 0] if n else np.zeros(0)
    if name == "file":
        vals = np.loadtxt(argstr.strip(), ndmin=1)
        if vals.size != n:
            raise ConfigurationError(f"{argstr}: expected {n} values, found {vals.size}")
        return vals.astype(float)
    try:
        args = [float(a) for a in argstr.split(",") if a.strip()]
    except ValueError:
        raise ConfigurationError(f"bad preset arguments in {spec!r}") from None
    nargs = {"const": 1, "step": 3, "sin": 2, "cos": 2, "linear": 2, "random": 1}
    if name not in nargs:
        try:
            return np.full(n, float(spec))
        except ValueError:
            raise ConfigurationError(f"unknown data preset {spec!r}; choose from {PRESETS}") from None
    if len(args) != nargs[name]:
        raise ConfigurationError(f"preset {name!r} takes {nargs[name]} arguments, got {spec!r}")
    if name == "const":
        return np.full(n, args[0])
    if name == "step":
        return np.where(x <= args[2], args[0], args[1])
    if name == "sin":
        return args[0] * np.sin(args[1] * np.pi * x)
    if name == "cos":
        return args[0] * np.cos(args[1] * np.pi * x)
    if name == "linear":
        return args[0] + args[1] * x
    if rng is None:
        raise ConfigurationError("random preset needs a seeded generator")
    return args[0] * rng.normal(size=n)

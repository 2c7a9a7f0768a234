"""Plain-text file formats used by the command line.

Every format is line-based; blank lines and ``#`` comments are ignored.

key-value config::

    seed = 3
    map_size = 64 64

pose::

    <joint id> <ax> <ay> <az>      axis-angle, joints not listed stay identity
    translation <x> <y> <z>
    beta <b1> ... <b16>
    alpha <a>

keypoints: one joint per line, ``x y z``, ``id x y z``, or the decoder's
``id u v x y z conf``.
"""

from pathlib import Path

import numpy as np

from .assets import NUM_BETAS, NUM_JOINTS
from .errors import ParseError


def _lines(path):
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError as e:
        raise ParseError(f"not a text file ({e})", path) from e
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _floats(tokens, path, no):
    try:
        vals = [float(t) for t in tokens]
    except ValueError as e:
        raise ParseError(f"expected numbers, got {' '.join(tokens)!r}", path, no) from e
    if not all(np.isfinite(vals)):
        raise ParseError("non-finite number", path, no)
    return vals


def read_key_values(path):
    """``key = value`` lines as an ordered ``{key: (value, line number)}``."""
    out = {}
    for no, line in _lines(path):
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ParseError(f"expected 'key = value', got {line!r}", path, no)
        if key in out:
            raise ParseError(f"duplicate key {key!r} (first on line {out[key][1]})", path, no)
        out[key] = (value.strip(), no)
    return out


def format_key_values(items):
    return "".join(f"{k} = {v}\n" for k, v in items)


def read_pose(path):
    """Returns ``(axis_angles (52, 3), translation, beta or None, alpha or None)``."""
    aa = np.zeros((NUM_JOINTS, 3))
    translation = np.zeros(3)
    beta = alpha = None
    seen = set()
    for no, line in _lines(path):
        tok = line.split()
        head = tok[0]
        if head == "translation":
            if len(tok) != 4:
                raise ParseError("translation needs 3 numbers", path, no)
            translation = np.array(_floats(tok[1:], path, no))
        elif head == "beta":
            if len(tok) != NUM_BETAS + 1:
                raise ParseError(f"beta needs {NUM_BETAS} numbers, got {len(tok) - 1}", path, no)
            beta = np.array(_floats(tok[1:], path, no))
        elif head == "alpha":
            if len(tok) != 2:
                raise ParseError("alpha needs 1 number", path, no)
            alpha = _floats(tok[1:], path, no)[0]
        else:
            if len(tok) != 4:
                raise ParseError(f"expected 'joint ax ay az', got {line!r}", path, no)
            try:
                j = int(head)
            except ValueError as e:
                raise ParseError(f"unknown entry {head!r}", path, no) from e
            if not 0 <= j < NUM_JOINTS:
                raise ParseError(f"joint id {j} outside 0..{NUM_JOINTS - 1}", path, no)
            if j in seen:
                raise ParseError(f"joint {j} given twice", path, no)
            seen.add(j)
            aa[j] = _floats(tok[1:], path, no)
    return aa, translation, beta, alpha


def write_pose(path, axis_angles, translation=None, beta=None, alpha=None):
    lines = ["# joint ax ay az (axis-angle, radians)"]
    lines += [f"{j} {a[0]:.17g} {a[1]:.17g} {a[2]:.17g}" for j, a in enumerate(np.asarray(axis_angles))]
    if translation is not None:
        lines.append("translation " + " ".join(f"{x:.17g}" for x in translation))
    if beta is not None:
        lines.append("beta " + " ".join(f"{x:.17g}" for x in beta))
    if alpha is not None:
        lines.append(f"alpha {float(alpha):.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_keypoints(path):
    """3D keypoints in file order; ids, when present, must run 0..J-1."""
    rows = []
    for no, line in _lines(path):
        tok = line.split()
        if len(tok) == 3:
            rows.append(_floats(tok, path, no))
            continue
        if len(tok) not in (4, 7):
            raise ParseError(f"expected 3, 4 or 7 columns, got {len(tok)}", path, no)
        vals = _floats(tok, path, no)
        if vals[0] != len(rows):
            raise ParseError(f"joint id {tok[0]} out of sequence (expected {len(rows)})", path, no)
        rows.append(vals[1:4] if len(tok) == 4 else vals[3:6])
    if not rows:
        raise ParseError("no keypoints", path)
    return np.array(rows)


def write_keypoints(path, xyz):
    Path(path).write_text("".join(f"{j} {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n" for j, p in enumerate(xyz)))


def format_decoded(decoded):
    out = ["# id u v x y z conf"]
    for j in range(len(decoded.confidence)):
        u, v = decoded.uv[j]
        x, y, z = decoded.xyz[j]
        out.append(f"{j} {int(u)} {int(v)} {x:.17g} {y:.17g} {z:.17g} {decoded.confidence[j]:.17g}")
    return "\n".join(out) + "\n"


def read_vectors(path, names, lengths):
    """Key-value file of whitespace-separated vectors; missing keys are zero."""
    kv = read_key_values(path)
    out = {n: np.zeros(lengths[n]) for n in names}
    for key, (value, no) in kv.items():
        if key not in out:
            raise ParseError(f"unknown key {key!r} (expected one of {', '.join(names)})", path, no)
        vals = _floats(value.split(), path, no)
        if len(vals) != lengths[key]:
            raise ParseError(f"{key} needs {lengths[key]} numbers, got {len(vals)}", path, no)
        out[key] = np.array(vals)
    return out


def write_obj(path, vertices, triangles, colors=None, comments=()):
    """Indexed-triangle OBJ; ``colors`` adds ``r g b`` after each vertex."""
    lines = [f"# {c}" for c in comments]
    if colors is None:
        lines += [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in vertices]
    else:
        lines += [f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g} {c[0]:.6g} {c[1]:.6g} {c[2]:.6g}"
                  for p, c in zip(vertices, colors)]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in np.asarray(triangles)]
    Path(path).write_text("\n".join(lines) + "\n")

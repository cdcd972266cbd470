"""Problem instances: data model, seeded random generation and file format.

Random generation
-----------------
The stream is xoshiro256** seeded through splitmix64 (the seeding its
authors recommend), so any language can reproduce an instance bit for bit.
``uniform()`` is ``(next() >> 11) * 2**-53``.  Draws, in order:

* mode 4 only: a kind list for all elements (a random permutation of
  circle/polygon/chain for the first three slots when size >= 3, uniform
  kinds for the rest, then a Fisher-Yates shuffle);
* per element: radius ``r = hi - (hi - lo) * u`` with ``[lo, hi]`` the class
  range (so ``r > 0``), then the shape:

  - circle: centre ``(100u, 100u)``;
  - polygon: vertex count ``3 + floor(8u)``, rotation ``2*pi*u/k``, centre
    drawn in ``[r, 100-r]^2`` so all vertices stay in the square;
  - chain: coverage ``u``, first breakpoint ``(100u, 100u)``, then three
    steps of length ``r`` in direction ``2*pi*u``; a direction leaving the
    square is redrawn (up to 64 times, then the point is clipped).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .geometry import Chain, Circle, Ellipse, Polygon, SocRegion, SocRow, SocSet, UnionSoc

_M64 = (1 << 64) - 1

RADII_RANGES = {1: (0.0, 5.0), 2: (5.0, 10.0), 3: (10.0, 15.0), 4: (15.0, 20.0)}
MODES = {1: "circles", 2: "polygons", 3: "chains", 4: "mixture"}
CHAIN_BREAKPOINTS = 4
BOX = 100.0


class InstanceFormatError(ValueError):
    """Malformed instance document."""


class InstanceValidationError(ValueError):
    """Well-formed document describing an invalid instance."""


def splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _M64


class Xoshiro256:
    """xoshiro256** 1.0 (Blackman & Vigna)."""

    def __init__(self, seed: int):
        s = seed & _M64
        self.s = []
        for _ in range(4):
            s, z = splitmix64(s)
            self.s.append(z)

    def next(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & _M64, 7) * 9) & _M64
        t = (s[1] << 17) & _M64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self) -> float:
        return (self.next() >> 11) * 2.0 ** -53

    def randint(self, lo: int, hi: int) -> int:
        """Integer in ``[lo, hi]``."""
        return lo + min(hi - lo, int(self.uniform() * (hi - lo + 1)))


@dataclass(frozen=True)
class Instance:
    elements: tuple
    name: str = "instance"
    seed: int = 0
    radii_class: int = 0  # 0 marks a hand-built instance
    mode: int = 0

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if len(self.elements) < 1:
            raise InstanceValidationError("instance needs at least one element")
        if self.radii_class not in (0, 1, 2, 3, 4) or self.mode not in (0, 1, 2, 3, 4):
            raise InstanceValidationError("radii_class and mode must be in 1..4 (0 = custom)")

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    def subset(self, indices) -> "Instance":
        return Instance(tuple(self.elements[i] for i in indices), self.name, self.seed,
                        self.radii_class, self.mode)


def _regular_polygon(cx, cy, r, k, phase):
    return Polygon(tuple((cx + r * math.cos(phase + 2 * math.pi * i / k),
                          cy + r * math.sin(phase + 2 * math.pi * i / k)) for i in range(k)))


def _chain(rng: Xoshiro256, r: float) -> Chain:
    alpha = rng.uniform()
    pts = [(BOX * rng.uniform(), BOX * rng.uniform())]
    for _ in range(CHAIN_BREAKPOINTS - 1):
        x0, y0 = pts[-1]
        for _ in range(64):
            th = 2 * math.pi * rng.uniform()
            x, y = x0 + r * math.cos(th), y0 + r * math.sin(th)
            if 0 <= x <= BOX and 0 <= y <= BOX:
                break
        else:
            x, y = min(BOX, max(0.0, x)), min(BOX, max(0.0, y))
        pts.append((x, y))
    return Chain(tuple(pts), coverage=alpha)


def generate(size: int, radii_class: int, mode: int, seed: int) -> Instance:
    if size < 2:
        raise ValueError("size must be at least 2")
    if radii_class not in RADII_RANGES:
        raise ValueError("radii_class must be 1..4")
    if mode not in MODES:
        raise ValueError("mode must be 1..4")
    rng = Xoshiro256(seed)
    kinds = {1: ["circle"] * size, 2: ["polygon"] * size, 3: ["chain"] * size}.get(mode)
    if kinds is None:
        base = ["circle", "polygon", "chain"]
        kinds = []
        if size >= 3:
            for i in range(3):
                j = rng.randint(i, 2)
                base[i], base[j] = base[j], base[i]
            kinds = list(base)
        while len(kinds) < size:
            kinds.append(("circle", "polygon", "chain")[rng.randint(0, 2)])
        for i in range(size - 1, 0, -1):
            j = rng.randint(0, i)
            kinds[i], kinds[j] = kinds[j], kinds[i]

    lo, hi = RADII_RANGES[radii_class]
    elements = []
    for kind in kinds:
        r = hi - (hi - lo) * rng.uniform()
        if kind == "circle":
            elements.append(Circle((BOX * rng.uniform(), BOX * rng.uniform()), r))
        elif kind == "polygon":
            k = 3 + min(7, int(8 * rng.uniform()))
            phase = 2 * math.pi * rng.uniform() / k
            cx = r + (BOX - 2 * r) * rng.uniform()
            cy = r + (BOX - 2 * r) * rng.uniform()
            elements.append(_regular_polygon(cx, cy, r, k, phase))
        else:
            elements.append(_chain(rng, r))
    name = f"xppn-n{size}-r{radii_class}-m{mode}-s{seed}"
    return Instance(tuple(elements), name, seed, radii_class, mode)


# --------------------------------------------------------------------------
# serialization


def fmt(x: float) -> str:
    """Real number at 17 significant digits (exact round trip)."""
    x = float(x)
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _pt_json(p) -> str:
    return f"[{fmt(p[0])}, {fmt(p[1])}]"


def _shape_json(e) -> list[str]:
    if isinstance(e, Circle):
        return ['"kind": "circle"', f'"center": {_pt_json(e.center)}', f'"radius": {fmt(e.radius)}']
    if isinstance(e, Ellipse):
        return ['"kind": "ellipse"', f'"center": {_pt_json(e.center)}',
                f'"axes": {_pt_json(e.axes)}', f'"rotation": {fmt(e.rotation)}']
    if isinstance(e, Polygon):
        vs = ", ".join(_pt_json(v) for v in e.vertices)
        return ['"kind": "polygon"', f'"vertices": [{vs}]']
    if isinstance(e, SocRegion):
        rows = []
        for r in e.soc.rows:
            B = f"[{_pt_json(r.B[0])}, {_pt_json(r.B[1])}]"
            rows.append(f'{{"B": {B}, "b": {_pt_json(r.b)}, "c": {_pt_json(r.c)}, "d": {fmt(r.d)}}}')
        return ['"kind": "soc"', f'"rows": [{", ".join(rows)}]']
    if isinstance(e, UnionSoc):
        ms = ", ".join("{" + ", ".join(_shape_json(m)) + "}" for m in e.members)
        return ['"kind": "union"', f'"members": [{ms}]']
    if isinstance(e, Chain):
        bs = ", ".join(_pt_json(v) for v in e.breakpoints)
        return ['"kind": "chain"', f'"breakpoints": [{bs}]', f'"coverage": {fmt(e.coverage)}']
    raise TypeError(f"unknown element type {type(e).__name__}")


def write_instance(inst: Instance) -> str:
    lines = ["{", f'  "name": {json.dumps(inst.name)},', f'  "seed": {int(inst.seed)},',
             f'  "radii_class": {int(inst.radii_class)},', f'  "mode": {int(inst.mode)},',
             '  "elements": [']
    body = []
    for e in inst.elements:
        fields = _shape_json(e) + [f'"discount": {fmt(e.discount)}']
        body.append("    {" + ", ".join(fields) + "}")
    lines.append(",\n".join(body))
    lines += ["  ]", "}"]
    return "\n".join(lines) + "\n"


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise InstanceFormatError(f"{where}: missing field '{key}'")
    return d[key]


def _num(v, where: str) -> float:
    if isinstance(v, str) and v in ("inf", "-inf"):
        return float(v)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceFormatError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _pair(v, where: str) -> tuple[float, float]:
    if not isinstance(v, list) or len(v) != 2:
        raise InstanceFormatError(f"{where}: expected [x, y]")
    return (_num(v[0], where), _num(v[1], where))


def _parse_shape(d: dict, where: str, discount: float = 1.0):
    if not isinstance(d, dict):
        raise InstanceFormatError(f"{where}: expected an object")
    kind = _need(d, "kind", where)
    try:
        if kind == "circle":
            return Circle(_pair(_need(d, "center", where), where + ".center"),
                          _num(_need(d, "radius", where), where + ".radius"), discount)
        if kind == "ellipse":
            return Ellipse(_pair(_need(d, "center", where), where + ".center"),
                           _pair(_need(d, "axes", where), where + ".axes"),
                           _num(d.get("rotation", 0.0), where + ".rotation"), discount)
        if kind == "polygon":
            vs = _need(d, "vertices", where)
            return Polygon(tuple(_pair(v, f"{where}.vertices[{i}]") for i, v in enumerate(vs)),
                           discount)
        if kind == "soc":
            rows = []
            for i, r in enumerate(_need(d, "rows", where)):
                w = f"{where}.rows[{i}]"
                B = _need(r, "B", w)
                rows.append(SocRow((_pair(B[0], w + ".B"), _pair(B[1], w + ".B")),
                                   _pair(_need(r, "b", w), w + ".b"),
                                   _pair(_need(r, "c", w), w + ".c"), _num(_need(r, "d", w), w + ".d")))
            return SocRegion(SocSet(tuple(rows)), discount)
        if kind == "union":
            ms = _need(d, "members", where)
            return UnionSoc(tuple(_parse_shape(m, f"{where}.members[{i}]") for i, m in enumerate(ms)),
                            discount)
        if kind == "chain":
            bs = _need(d, "breakpoints", where)
            return Chain(tuple(_pair(v, f"{where}.breakpoints[{i}]") for i, v in enumerate(bs)),
                         _num(d.get("coverage", 0.0), where + ".coverage"), discount)
    except (InstanceFormatError, InstanceValidationError):
        raise
    except ValueError as exc:
        raise InstanceValidationError(f"{where}: {exc}") from exc
    raise InstanceFormatError(f"{where}: unknown kind {kind!r}")


def read_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level must be an object")
    raw = _need(doc, "elements", "instance")
    if not isinstance(raw, list):
        raise InstanceFormatError("instance: 'elements' must be a list")
    elements = []
    for i, d in enumerate(raw):
        where = f"element {i}"
        disc = _num(d.get("discount", 1.0), where + ".discount") if isinstance(d, dict) else 1.0
        elements.append(_parse_shape(d, where, disc))
    try:
        return Instance(tuple(elements), str(doc.get("name", "instance")), int(doc.get("seed", 0)),
                        int(doc.get("radii_class", 0)), int(doc.get("mode", 0)))
    except (TypeError, ValueError) as exc:
        raise InstanceValidationError(str(exc)) from exc


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return read_instance(fh.read())


def save_instance(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_instance(inst))

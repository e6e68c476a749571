"""Built-in benchmark domains: simple, grounded blocksworld and ferry.

Grounding is deterministic: atoms and actions are emitted in lexicographic
order of (schema name, argument indices), so equal parameters always produce
identical domains and therefore identical tensor indices.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Action, Domain, validate_domain


def builtin_simple() -> Domain:
    """Three-atom toy domain: positive traces alternate a/b with c's between."""
    return Domain(
        name="simple",
        atoms=("p", "q", "r"),
        actions=(
            Action.make("a", pre=["p", "r"], add=["q"], delete=["p", "r"]),
            Action.make("b", pre=["q", "r"], add=["p"], delete=["q", "r"]),
            Action.make("c", pre=[], add=["r"], delete=[]),
        ),
    )


def make_blocksworld(n_blocks: int) -> Domain:
    """Grounded 4-operator blocksworld with a gripper over `n_blocks` blocks."""
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    blocks = [f"b{i}" for i in range(1, n_blocks + 1)]

    def on(x: str, y: str) -> str:
        return f"on({x},{y})"

    atoms: list[str] = []
    atoms += [f"clear({x})" for x in blocks]
    atoms += ["handempty"]
    atoms += [f"holding({x})" for x in blocks]
    atoms += [on(x, y) for x in blocks for y in blocks if x != y]
    atoms += [f"ontable({x})" for x in blocks]

    actions: list[Action] = []
    for x in blocks:
        actions.append(Action.make(
            f"pickup({x})",
            pre=[f"ontable({x})", f"clear({x})", "handempty"],
            add=[f"holding({x})"],
            delete=[f"ontable({x})", f"clear({x})", "handempty"],
        ))
    for x in blocks:
        actions.append(Action.make(
            f"putdown({x})",
            pre=[f"holding({x})"],
            add=[f"ontable({x})", f"clear({x})", "handempty"],
            delete=[f"holding({x})"],
        ))
    for x in blocks:
        for y in blocks:
            if x != y:
                actions.append(Action.make(
                    f"stack({x},{y})",
                    pre=[f"holding({x})", f"clear({y})"],
                    add=[on(x, y), f"clear({x})", "handempty"],
                    delete=[f"holding({x})", f"clear({y})"],
                ))
    for x in blocks:
        for y in blocks:
            if x != y:
                actions.append(Action.make(
                    f"unstack({x},{y})",
                    pre=[on(x, y), f"clear({x})", "handempty"],
                    add=[f"holding({x})", f"clear({y})"],
                    delete=[on(x, y), f"clear({x})", "handempty"],
                ))

    d = Domain(name=f"blocksworld-{n_blocks}b", atoms=tuple(atoms),
               actions=tuple(actions))
    validate_domain(d)
    return d


def make_ferry(n_ports: int, n_cars: int) -> Domain:
    """Grounded ferry domain: one ferry moving cars between ports."""
    if n_ports < 2:
        raise ValueError("n_ports must be >= 2 (sailing needs two ports)")
    if n_cars < 1:
        raise ValueError("n_cars must be >= 1")
    ports = [f"p{i}" for i in range(1, n_ports + 1)]
    cars = [f"c{i}" for i in range(1, n_cars + 1)]

    atoms: list[str] = []
    atoms += [f"at({c},{p})" for c in cars for p in ports]
    atoms += [f"at-ferry({p})" for p in ports]
    atoms += ["empty-ferry"]
    atoms += [f"on({c})" for c in cars]

    actions: list[Action] = []
    for c in cars:
        for p in ports:
            actions.append(Action.make(
                f"board({c},{p})",
                pre=[f"at({c},{p})", f"at-ferry({p})", "empty-ferry"],
                add=[f"on({c})"],
                delete=[f"at({c},{p})", "empty-ferry"],
            ))
    for c in cars:
        for p in ports:
            actions.append(Action.make(
                f"debark({c},{p})",
                pre=[f"on({c})", f"at-ferry({p})"],
                add=[f"at({c},{p})", "empty-ferry"],
                delete=[f"on({c})"],
            ))
    for p1 in ports:
        for p2 in ports:
            if p1 != p2:
                actions.append(Action.make(
                    f"sail({p1},{p2})",
                    pre=[f"at-ferry({p1})"],
                    add=[f"at-ferry({p2})"],
                    delete=[f"at-ferry({p1})"],
                ))

    suffix = f"{n_cars}c" if n_ports == 2 else f"{n_ports}p{n_cars}c"
    d = Domain(name=f"ferry-{suffix}", atoms=tuple(atoms), actions=tuple(actions))
    validate_domain(d)
    return d


@dataclass(frozen=True)
class GroundingSpec:
    """Parameters naming one grounded instance of a built-in family."""

    family: str
    blocks: int = 2
    ports: int = 2
    cars: int = 1

    def build(self) -> Domain:
        if self.family == "simple":
            return builtin_simple()
        if self.family == "blocksworld":
            return make_blocksworld(self.blocks)
        if self.family == "ferry":
            return make_ferry(self.ports, self.cars)
        raise ValueError(f"unknown domain family: {self.family!r}")


BUILTIN_NAMES = ("simple", "blocksworld-2b", "blocksworld-3b", "ferry-1c", "ferry-2c")

# Maximum trace length used when building training data for each benchmark.
TRAIN_MAX_LEN = {
    "simple": 10,
    "blocksworld-2b": 20,
    "ferry-1c": 20,
    "blocksworld-3b": 30,
    "ferry-2c": 30,
}


def builtin_domain(name: str) -> Domain:
    """Return one of the five benchmark domains by name."""
    specs = {
        "simple": GroundingSpec("simple"),
        "blocksworld-2b": GroundingSpec("blocksworld", blocks=2),
        "blocksworld-3b": GroundingSpec("blocksworld", blocks=3),
        "ferry-1c": GroundingSpec("ferry", ports=2, cars=1),
        "ferry-2c": GroundingSpec("ferry", ports=2, cars=2),
    }
    if name not in specs:
        raise ValueError(f"unknown builtin domain {name!r}; "
                         f"expected one of {', '.join(BUILTIN_NAMES)}")
    return specs[name].build()

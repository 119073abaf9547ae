"""Adjacent modifications of a Fuchsian system towards trivial type."""

from btlattice import explore, plemelj_search, spread_certificate
from btlattice.generators import plemelj_instance

inst = plemelj_instance(0, 2, 3)
print("start type:", inst.type.values)
print("spread:", spread_certificate(inst).within_bound)

res = plemelj_search(inst, 0)
print("plemelj depth:", res.depth, "final type:", res.state.type.values, "strong:", res.state.is_strong)

rep = explore(inst, max_depth=2)
print("explored nodes:", len(rep["nodes"]), "types reached:", rep["reached_types"])

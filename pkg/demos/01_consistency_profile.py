"""Profile the consistency of a multi-source snapshot.

Generates a synthetic snapshot with known source quality, then walks the
profiling toolkit: redundancy, number of distinct values per item, entropy,
deviation, dominant values and their dominance factors, and per-source
accuracy against the gold standard.
"""

from collections import Counter

import truthfuse as tf
from truthfuse.model import Kind
from truthfuse.synthetic import SyntheticAttribute, SyntheticSpec

spec = SyntheticSpec(
    n_sources=8, n_items=200,
    attributes=(SyntheticAttribute("last_price", Kind.NUMBER, 0.01),
                SyntheticAttribute("depart_time", Kind.TIME_OF_DAY, 10.0),
                SyntheticAttribute("gate", Kind.TEXT, 0.0)),
    accuracies=(0.97, 0.95, 0.9, 0.85, 0.8, 0.7, 0.6, 0.5),
    coverage=(1.0, 0.95, 0.9, 0.9, 0.85, 0.8, 0.8, 0.7),
    false_pool=10)
claims, gold, _ = tf.generate_synthetic(spec, seed=42)

print(f"snapshot: {len(claims)} claims, {len(claims.sources)} sources, "
      f"{len(claims.items)} items\n")

profiles = tf.profile_items(claims)

print("== value inconsistency ==")
num_values = Counter(p.num_values for p in profiles.values())
for k in sorted(num_values):
    share = num_values[k] / len(profiles)
    print(f"  items with {k} distinct value(s): {share:6.1%}")

entropies = [p.entropy for p in profiles.values()]
print(f"  mean entropy: {sum(entropies) / len(entropies):.3f} bits")

rel = [p.deviation for it, p in profiles.items()
       if p.deviation is not None
       and claims.attribute_of(it).kind is Kind.NUMBER]
mins = [p.deviation for it, p in profiles.items()
        if p.deviation is not None
        and claims.attribute_of(it).kind is Kind.TIME_OF_DAY]
print(f"  mean relative deviation (numbers): {sum(rel) / len(rel):.4f}")
print(f"  mean deviation (times, minutes):   {sum(mins) / len(mins):.2f}\n")

print("== dominant values ==")
factors = [p.dominance_factor for p in profiles.values()]
strong = sum(1 for f in factors if f > 0.9) / len(factors)
majority = sum(1 for f in factors if f > 0.5) / len(factors)
print(f"  dominance factor > 0.9 on {strong:6.1%} of items")
print(f"  dominance factor > 0.5 on {majority:6.1%} of items")
print(f"  precision of dominant values: "
      f"{tf.precision_of_dominant(claims, gold):.3f}\n")

print("== source quality ==")
print(f"  {'source':>8} {'claims':>7} {'accuracy':>9} {'coverage':>9}")
for s, sp in sorted(tf.profile_sources(claims, gold).items()):
    print(f"  {s:>8} {sp.claim_count:>7} {sp.accuracy:>9.3f} "
          f"{sp.coverage:>9.3f}")

print("\n== redundancy ==")
item_red = [tf.item_redundancy(it, claims) for it in claims.items]
print(f"  mean data-item redundancy: {sum(item_red) / len(item_red):.3f}")
obj_red = [tf.object_redundancy(o, claims) for o in claims.object_ids]
print(f"  mean object redundancy:    {sum(obj_red) / len(obj_red):.3f}")

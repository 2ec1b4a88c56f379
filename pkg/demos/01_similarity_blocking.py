"""From raw records to a metric-sorted workload.

Two small product tables are compared attribute by attribute; weighted
token-Jaccard scores become the pair metric, and a blocking threshold drops
the pairs that are obviously unmatched before any human gets involved.
"""

from pairtriage.similarity import (
    JACCARD,
    JARO_WINKLER,
    RecordTable,
    SimilarityConfig,
    aggregate_similarity,
    block,
    derive_weights,
    jaccard_tokens,
    jaro_winkler,
)

catalog_a = RecordTable(
    records=[
        ("a1", {"name": "stainless steel water bottle 750ml", "brand": "Hydra"}),
        ("a2", {"name": "espresso machine deluxe", "brand": "BrewMaster"}),
        ("a3", {"name": "wireless optical mouse", "brand": "ClickCo"}),
        ("a4", {"name": "mechanical keyboard backlit", "brand": "ClickCo"}),
    ],
    schema=["name", "brand"],
)
catalog_b = RecordTable(
    records=[
        ("b1", {"name": "water bottle stainless steel 750 ml", "brand": "Hydra"}),
        ("b2", {"name": "deluxe espresso coffee machine", "brand": "Brewmaster"}),
        ("b3", {"name": "usb desk fan", "brand": "Breeze"}),
        ("b4", {"name": "backlit mechanical gaming keyboard", "brand": "ClickCo"}),
    ],
    schema=["name", "brand"],
)

# the two attribute measures side by side
print("token jaccard:", jaccard_tokens("espresso machine deluxe", "deluxe espresso coffee machine"))
print("jaro-winkler: ", jaro_winkler("BrewMaster", "Brewmaster"))

# attributes with more distinct values carry more weight
weights = derive_weights(catalog_a, catalog_b, ["name", "brand"])
print("derived weights:", weights)

config = SimilarityConfig(
    measures={"name": JACCARD, "brand": JARO_WINKLER},
    weights=weights,
    blocking_threshold=0.25,
)
pair = aggregate_similarity(catalog_a.records[0][1], catalog_b.records[0][1], config)
print("aggregate similarity a1|b1:", round(pair, 4))

gold = {("a1", "b1"), ("a2", "b2"), ("a4", "b4")}
workload = block(catalog_a, catalog_b, config, gold=gold, subset_size=4)
print(f"\nblocked workload: {len(workload)} of {len(catalog_a) * len(catalog_b)} pairs kept")
for p in workload.pairs:
    print(f"  {p.id:8s} metric={p.metric:.3f} truth={p.truth}")

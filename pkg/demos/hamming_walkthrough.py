"""Walk through the extended Hamming code examples step by step.

Starts from the single-cycle tail-biting model, removes its wrap-around
state, recovers the parity check that removal lost, absorbs that check into
a cycle-free model, then merges and splits two constraints of the result.

Run with ``python demos/hamming_walkthrough.py``.
"""

from __future__ import annotations

from gmcodes.fixtures import EXTENDED_HAMMING_G, binary_tree_model_hamming_minus, tailbiting_hamming_model
from gmcodes.gf2codes import LinearCode
from gmcodes.model import behavior, realized_code, topology, verify_qm
from gmcodes.transform import absorb_spc, isomorphic, merge, redefine_internal, remove_internal, repetition_insert, split


def describe(title: str, gm) -> None:
    topo = topology(gm)
    rep = verify_qm(gm, 0)
    code = realized_code(gm)
    print(f"{title}: {len(gm.constraints)} constraints, {len(gm.hiddens)} hidden variables, "
          f"cycle-free={topo.cycle_free}, 2^{rep.m}-ary, realizes an [{code.n},{code.k}] code")


def main() -> None:
    c_h = LinearCode.from_generator(EXTENDED_HAMMING_G, [f"V{i}" for i in range(1, 9)])

    tb = tailbiting_hamming_model()
    describe("tail-biting model", tb)
    print("  projection of the behavior equals the extended Hamming code:",
          behavior(tb).visible_projection.same_code(c_h))

    with_c9 = repetition_insert(tb, "S1")
    cid = with_c9.constraints[-1].cid
    _, smaller = remove_internal(with_c9, cid)
    print(f"\nremoving the repetition {cid} on the wrap-around state leaves a code of dimension {smaller.k}")
    (eq,) = redefine_internal(with_c9, cid)
    print(f"the lost constraint is the parity check {' + '.join(eq)} = 0")

    tree = binary_tree_model_hamming_minus()
    describe("\ncycle-free binary model of the smaller code", tree)
    absorbed = absorb_spc(tree, eq)
    describe("after absorbing the check", absorbed)
    print("  realizes the extended Hamming code:", realized_code(absorbed).same_code(c_h))

    merged = merge(absorbed, "C14", "C17")
    describe("\nafter merging C14 and C17", merged)
    new = merged.constraints[-1]
    fused = [h for h in new.hidden_labels if merged.hidden(h).size == 3][0]
    back = split(merged, new.cid, (["S12", "S13", fused], ["S15", "S16", fused]))
    describe(f"after splitting {new.cid} again", back)
    print("  isomorphic to the model before the merge:", isomorphic(back, absorbed))


if __name__ == "__main__":
    main()

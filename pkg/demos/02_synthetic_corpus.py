# Synthetic corpus anatomy
#
# The generator builds labeled sentences where the only reliable signal for
# the temporal status is the auxiliary plus the cue verb's inflection. A run
# of distractor tokens is wedged between the cue and the event mention, so
# the cue drifts out of any fixed surface window while the dependency chain
# keeps it adjacent.

from collections import Counter

from depchain import (
    SynthConfig,
    TemporalStatus,
    chain_stats,
    extract_chain,
    extract_window,
    generate_synthetic,
)

cfg = SynthConfig(n_sentences=50, seed=7, distractor_len=9)
sents, mentions = generate_synthetic(cfg)

counts = Counter(m.label.name for m in mentions)
print("label counts:", dict(counts))

# Pick one FUTURE example and show where the cue lands.
future = next(m for m in mentions if m.label is TemporalStatus.FUTURE)
sent = next(s for s in sents if (s.doc_id, s.sent_id) == (future.doc_id, future.sent_id))
print("\nsentence:", " ".join(t.form for t in sent.tokens))
print("mention: ", sent.token(future.token_id).form, "at token", future.token_id)

chain = extract_chain(sent, future.token_id)
window = extract_window(sent, future.token_id, half_width=7)
print("chain:   ", [sent.token(i).form for i in chain.member_ids])
print("window:  ", [sent.token(i).form for i in window.member_ids])

in_chain = "will" in {sent.token(i).form for i in chain.member_ids}
in_window = "will" in {sent.token(i).form for i in window.member_ids}
print(f"\ncue 'will' in chain: {in_chain}, in +/-7 window: {in_window}")

# Corpus-level view of the same fact: the chain stays short and the two
# representations barely overlap once distractors are long enough.
stats = chain_stats(sents, mentions, half_width=7)
print(f"\nmean chain length {stats.mean_length:.1f}, median {stats.median_length:.1f}")
print(f"mean chain/window overlap {stats.mean_window_overlap:.2f}")

# How often does the chain actually carry the auxiliary for FUTURE cases?
by_key = {(s.doc_id, s.sent_id): s for s in sents}
futures = [m for m in mentions if m.label is TemporalStatus.FUTURE]
covered = sum(
    "will" in {by_key[(m.doc_id, m.sent_id)].token(i).form
               for i in extract_chain(by_key[(m.doc_id, m.sent_id)], m.token_id).member_ids}
    for m in futures
)
print(f"FUTURE cue on chain in {covered}/{len(futures)} sentences")

"""
Dependency chains versus local windows
======================================

Walks one sentence through the extraction pipeline: parse the CoNLL-U
block, pull the two-stage dependency chain around an event mention, and
compare it with the flat +/-7 token context window.
"""

from depchain import extract_chain, extract_window, parse_conllu

# A hand-built tree. The event of interest is "protest" (token 8), which
# hangs off "describing", which hangs off the root verb "launch". The
# auxiliary "will" attaches to "launch" and is what marks the future.
TEXT = """# newdoc id = demo
# sent_id = s1
1\tactivists\t_\t_\t_\t_\t3\tnsubj\t_\t_
2\twill\t_\t_\t_\t_\t3\taux\t_\t_
3\tlaunch\t_\t_\t_\t_\t0\troot\t_\t_
4\ta\t_\t_\t_\t_\t5\tdet\t_\t_
5\tstrike\t_\t_\t_\t_\t3\tdobj\t_\t_
6\tdescribing\t_\t_\t_\t_\t3\txcomp\t_\t_
7\ttheir\t_\t_\t_\t_\t8\tnmod:poss\t_\t_
8\tprotest\t_\t_\t_\t_\t6\tdobj\t_\t_
"""

sent = parse_conllu(TEXT)[0]
print("sentence:", " ".join(t.form for t in sent.tokens))

# Stage 1 collects the target, everything on the path up to the root, and
# the target's own subtree. Stage 2 then adds aux/auxpass/cop dependents
# of any stage-1 token, which is how "will" gets in.
chain = extract_chain(sent, target_id=8)
stage1 = [sent.token(i).form for i in chain.stage1_ids]
full = [sent.token(i).form for i in chain.member_ids]
print("stage 1:", stage1)
print("chain:  ", full)

# The window keeps surface neighbors regardless of syntax. With a small
# half-width it grabs "their" but has no idea "will" exists.
window = extract_window(sent, target_id=8, half_width=2)
print("window: ", [sent.token(i).form for i in window.member_ids])

# The subject and the unrelated object "a strike" never enter the chain;
# they are neither ancestors nor dependents of the mention.
dropped = [t.form for t in sent.tokens if t.id not in chain.member_ids]
print("dropped:", dropped)

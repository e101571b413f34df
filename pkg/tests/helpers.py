BOTH = "performs(A, fireA) and performs(B, fireB)"


def alice_states(tree):
    """Alice's time-2 local states with go=1, keyed by reply."""
    return {
        ls.get("reply"): ls
        for ls in tree.local_states("A")
        if ls.time == 2 and ls.get("go") == 1
    }

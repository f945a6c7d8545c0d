"""Deterministic fresh-name supply.

Every binder introduced during substitution gets a fresh name, which keeps
the whole term tree capture-free without scope bookkeeping.  The counter is
seedable so printed residuals are byte-stable run to run.
"""


class FreshNames:
    def __init__(self, seed=0):
        self.counter = int(seed)
        self.used = set()

    def reserve(self, name):
        self.used.add(name)

    def fresh(self, base="x"):
        base = base.rstrip("0123456789_") or "x"
        while True:
            self.counter += 1
            candidate = f"{base}_{self.counter}"
            if candidate not in self.used:
                self.used.add(candidate)
                return candidate

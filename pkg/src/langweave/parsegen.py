"""LL(1) analysis: nullable / FIRST / FOLLOW, prediction table, and
foreign-position diagnostics.

Terminal identity: literal terminals by exact text, token classes by tag,
plus a synthetic end-of-input marker.  Actions and epsilon are transparent.
A foreign nonterminal contributes nothing to FIRST and is never nullable:
the inner language's tokens are unknowable here, so any rule that would
need a foreign FIRST set to pick between alternatives is diagnosed.
"""

from dataclasses import dataclass, field

from .errors import Ll1Conflict
from .grammar import ActionUse, EpsilonUse, ForeignUse, Lit, NtUse, TokClass

EOI = ("eoi", "")


def _symbol(use):
    """('t', token-key) | ('n', rule) | ('foreign', lang.entry) | None."""
    if isinstance(use, Lit):
        return ("t", ("lit", use.text))
    if isinstance(use, TokClass):
        return ("t", ("class", use.cls))
    if isinstance(use, NtUse):
        return ("n", use.name)
    if isinstance(use, ForeignUse):
        return ("foreign", f"{use.lang}.{use.entry}")
    if isinstance(use, (ActionUse, EpsilonUse)):
        return None
    raise TypeError(f"unexpected term use {use!r}")


def token_key_str(key):
    kind, text = key
    if kind == "lit":
        return f'"{text}"'
    if kind == "class":
        return text
    return "<eoi>"


@dataclass
class Analysis:
    nullable: dict = field(default_factory=dict)
    first: dict = field(default_factory=dict)
    follow: dict = field(default_factory=dict)

    def seq_first(self, uses):
        """FIRST of a symbol sequence plus whether it is nullable."""
        out = set()
        for use in uses:
            sym = _symbol(use)
            if sym is None:
                continue
            kind, key = sym
            if kind == "t":
                out.add(key)
                return out, False
            if kind == "foreign":
                return out, False
            out |= self.first[key]
            if not self.nullable[key]:
                return out, False
        return out, True


def analyze(g):
    """Least-fixpoint nullable/FIRST/FOLLOW over the grammar's alphabet."""
    a = Analysis()
    for name in g.rules:
        a.nullable[name] = False
        a.first[name] = set()
        a.follow[name] = set()
    for rule in g.rules.values():
        if rule.is_entry:
            a.follow[rule.name].add(EOI)

    changed = True
    while changed:
        changed = False
        for rule in g.rules.values():
            for prod in rule.productions:
                first, nullable = a.seq_first(prod.body)
                if not first <= a.first[rule.name]:
                    a.first[rule.name] |= first
                    changed = True
                if nullable and not a.nullable[rule.name]:
                    a.nullable[rule.name] = True
                    changed = True

    changed = True
    while changed:
        changed = False
        for rule in g.rules.values():
            for prod in rule.productions:
                symbols = [s for s in (_symbol(u) for u in prod.body) if s is not None]
                for i, (kind, key) in enumerate(symbols):
                    if kind != "n":
                        continue
                    rest_first = set()
                    rest_nullable = True
                    for k2, key2 in symbols[i + 1:]:
                        if k2 == "t":
                            rest_first.add(key2)
                            rest_nullable = False
                            break
                        if k2 == "foreign":
                            rest_nullable = False
                            break
                        rest_first |= a.first[key2]
                        if not a.nullable[key2]:
                            rest_nullable = False
                            break
                    add = set(rest_first)
                    if rest_nullable:
                        add |= a.follow[rule.name]
                    if not add <= a.follow[key]:
                        a.follow[key] |= add
                        changed = True
    return a


@dataclass
class ParseTable:
    analysis: Analysis
    table: dict           # (rule, token-key) -> production index
    single: set           # rules with exactly one production (no lookahead)
    conflicts: list


def validate_foreign_positions(g, analysis=None):
    """A foreign nonterminal must never be what production selection hinges
    on: with several alternatives, none may reach a foreign use first."""
    a = analysis if analysis is not None else analyze(g)
    diagnostics = []
    for rule in g.rules.values():
        if len(rule.productions) < 2:
            continue
        for idx, prod in enumerate(rule.productions):
            for use in prod.body:
                sym = _symbol(use)
                if sym is None:
                    continue
                kind, key = sym
                if kind == "foreign":
                    diagnostics.append(
                        f"rule {rule.name!r} production {idx}: foreign nonterminal "
                        f"{key} decides selection among alternatives, but its "
                        "tokens are unknown to this language")
                    break
                if kind == "t":
                    break
                if not a.nullable[key]:
                    break
        # nullable prefixes fall through to the next symbol, handled above
    return diagnostics


def build_table(g):
    """Prediction table; raises Ll1Conflict if any cell is claimed twice."""
    a = analyze(g)
    conflicts = list(validate_foreign_positions(g, a))
    table = {}
    single = set()
    for rule in g.rules.values():
        if len(rule.productions) == 1:
            single.add(rule.name)
            continue
        for idx, prod in enumerate(rule.productions):
            first, nullable = a.seq_first(prod.body)
            select = set(first)
            if nullable:
                select |= a.follow[rule.name]
            for key in sorted(select):
                cell = (rule.name, key)
                if cell in table:
                    conflicts.append(
                        f"rule {rule.name!r}: productions {table[cell]} and {idx} "
                        f"both claim token {token_key_str(key)}")
                else:
                    table[cell] = idx
    if conflicts:
        raise Ll1Conflict(conflicts)
    return ParseTable(a, table, single, [])


def literal_tokens(g):
    lits = set()
    for rule in g.rules.values():
        for prod in rule.productions:
            for use in prod.body:
                if isinstance(use, Lit):
                    lits.add(use.text)
    return lits


def used_classes(g):
    classes = set()
    for rule in g.rules.values():
        for prod in rule.productions:
            for use in prod.body:
                if isinstance(use, TokClass):
                    classes.add(use.cls)
    return classes


def format_analysis(g, a):
    """Stable text rendering of the sets for the check command."""
    lines = []
    for name in sorted(g.rules):
        first = ", ".join(token_key_str(k) for k in sorted(a.first[name]))
        follow = ", ".join(token_key_str(k) for k in sorted(a.follow[name]))
        nullable = "yes" if a.nullable[name] else "no"
        lines.append(f"{name}: nullable={nullable} first={{{first}}} follow={{{follow}}}")
    return "\n".join(lines)


def format_table(g, table):
    lines = []
    for (rule, key), idx in sorted(table.table.items(),
                                   key=lambda kv: (kv[0][0], kv[0][1])):
        lines.append(f"{rule} x {token_key_str(key)} -> production {idx}")
    for name in sorted(table.single):
        lines.append(f"{name} -> sole production")
    return "\n".join(lines)

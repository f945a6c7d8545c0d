"""Command-line driver.

    langweave check  --grammar name=path [...]          validate grammars
    langweave expand (--lang NAME | PACK)               show expanded grammar
    langweave run    (LANG|PACK) [INPUT] [options]      parse and emit

Bundled example languages are addressed by pack id (``langweave run
minusdiv_codegen "1-4/2-3" --emit residual``).  Stdout carries data;
diagnostics go to stderr.  Exit codes: 0 ok, 1 parse/grammar error,
2 action or type error, 3 step budget, 64 usage, 66 missing file.
"""

import argparse
import sys

from . import packs
from .errors import (EXIT_ACTION, EXIT_BUDGET, EXIT_NOINPUT, EXIT_OK,
                     EXIT_PARSE, EXIT_USAGE, EvalExit, LangError, Ll1Conflict,
                     StepBudgetExceeded)
from .evaluator import Session, apply_value, render_value, run_term_to_normal
from .fragments import finalize
from .grammar import prepare, print_grammar
from .grammar_reader import read_grammar
from .parsegen import build_table, format_analysis, format_table
from .printer import print_core
from .reader import read_core
from .runtime import LanguageRegistry, Parser
from .terms import FragVal, Int, Lam


class _Usage(Exception):
    pass


def _load_grammar_file(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except FileNotFoundError:
        print(f"error: no such file: {path}", file=sys.stderr)
        raise SystemExit(EXIT_NOINPUT)


def _registry_from(args, session, extra_packs=()):
    reg = LanguageRegistry()
    prepared_by_name = {}
    for spec_item in args.grammar or []:
        if "=" not in spec_item:
            raise _Usage(f"--grammar expects name=path, got {spec_item!r}")
        name, path = spec_item.split("=", 1)
        gdef = read_grammar(_load_grammar_file(path), session.names)
        prepared, diagnostics = prepare(gdef)
        if diagnostics:
            for d in diagnostics:
                print(f"diagnostic: {d}", file=sys.stderr)
            raise Ll1Conflict(diagnostics)
        reg.register(name, prepared, raw=True)
        prepared_by_name[name] = prepared
    for pack_id in extra_packs:
        manifest = packs.load_manifest(pack_id)
        if manifest["kind"] != "grammar":
            continue
        gdef = read_grammar(packs.pack_source(manifest), session.names)
        prepared, diagnostics = prepare(gdef)
        if diagnostics:
            raise Ll1Conflict(diagnostics)
        reg.register(pack_id, prepared, raw=True)
        prepared_by_name[pack_id] = prepared
    return reg, prepared_by_name


def _emit_outputs(outs, emit, session):
    if emit == "residual":
        for term in outs:
            if isinstance(term, FragVal):
                term = finalize(term.fragment, session)
            if isinstance(term, Lam):
                print(print_core(term))
            else:
                print(render_value(term))
    else:
        for term in outs:
            print(render_value(term))


def _parse_invoke_args(expr):
    values = []
    for chunk in (expr or "").split():
        values.append(Int(int(chunk)))
    return values


def _load_prepared(args, session, extra_packs=()):
    """Read and prepare grammars without registering (check must report
    conflicts itself rather than fail on them)."""
    prepared = {}
    for spec_item in args.grammar or []:
        if "=" not in spec_item:
            raise _Usage(f"--grammar expects name=path, got {spec_item!r}")
        name, path = spec_item.split("=", 1)
        gdef = read_grammar(_load_grammar_file(path), session.names)
        prepared[name] = prepare(gdef)
    for pack_id in extra_packs:
        manifest = packs.load_manifest(pack_id)
        if manifest["kind"] != "grammar":
            continue
        gdef = read_grammar(packs.pack_source(manifest), session.names)
        prepared[pack_id] = prepare(gdef)
    return prepared


def cmd_check(args):
    session = Session(seed=args.seed)
    clean = True
    names = list(args.packs or [])
    loaded = _load_prepared(args, session, extra_packs=names)
    if not loaded:
        raise _Usage("check needs at least one grammar (--grammar name=path or a pack id)")
    for name, (grammar, diagnostics) in loaded.items():
        print(f"== language {name}")
        if diagnostics:
            for d in diagnostics:
                print(f"diagnostic: {d}")
            clean = False
            continue
        try:
            table = build_table(grammar)
        except Ll1Conflict as conflict:
            clean = False
            for d in conflict.diagnostics:
                print(f"conflict: {d}")
            continue
        print(format_analysis(grammar, table.analysis))
        print(format_table(grammar, table))
    return EXIT_OK if clean else EXIT_PARSE


def cmd_expand(args):
    session = Session(seed=args.seed)
    if args.lang and (args.grammar or []):
        reg, prepared = _registry_from(args, session)
        if args.lang not in prepared:
            raise _Usage(f"--lang {args.lang!r} does not name a loaded grammar")
        print(print_grammar(prepared[args.lang]), end="")
        return EXIT_OK
    pack_id = args.lang or (args.packs[0] if args.packs else None)
    if not pack_id:
        raise _Usage("expand needs --grammar/--lang or a pack id")
    manifest = packs.load_manifest(pack_id)
    if manifest["kind"] != "grammar":
        raise _Usage(f"pack {pack_id!r} is a core script, not a grammar")
    gdef = read_grammar(packs.pack_source(manifest), session.names)
    prepared, diagnostics = prepare(gdef)
    if diagnostics:
        for d in diagnostics:
            print(f"diagnostic: {d}", file=sys.stderr)
        return EXIT_PARSE
    print(print_grammar(prepared), end="")
    return EXIT_OK


def _run_script_pack(manifest, args, session):
    creator = read_core(packs.pack_source(manifest), session.names)
    result = apply_value(creator, [], session)
    emit = args.emit or manifest.get("default_emit", "value")
    if emit == "residual":
        for term in result:
            term = run_term_to_normal(term, session)
            print(print_core(term) if isinstance(term, Lam) else render_value(term))
        return EXIT_OK
    invoke_args = _parse_invoke_args(args.input_text)
    outs = []
    for term in result:
        outs.extend(apply_value(term, invoke_args, session))
    for line in session.out:
        print(line)
    _emit_outputs(outs, "value", session)
    return EXIT_OK


def cmd_run(args):
    session = Session(seed=args.seed, budget=args.steps)
    lang = args.lang or args.positional_lang
    if not lang:
        raise _Usage("run needs a language (--lang or positional)")

    known_packs = packs.pack_ids()
    loaded_names = [s.split("=", 1)[0] for s in (args.grammar or []) if "=" in s]
    wanted_packs = [lang] if lang in known_packs and lang not in loaded_names else []
    if wanted_packs:
        manifest = packs.load_manifest(lang)
        if manifest["kind"] == "script":
            return _run_script_pack(manifest, args, session)
    reg, prepared = _registry_from(args, session, extra_packs=wanted_packs)
    if lang not in reg.languages:
        raise _Usage(f"language {lang!r} is neither a loaded grammar nor a pack")

    entry = args.entry
    if entry is None and wanted_packs:
        entry = packs.load_manifest(lang).get("entry")
    if entry is None:
        entries = reg.languages[lang].grammar.entry_rules
        if len(entries) == 1:
            entry = entries[0]
        else:
            raise _Usage("run needs --entry (language has several entry rules)")

    if args.input_text is None:
        raise _Usage("run needs input (positional, --expr, or --input)")

    emit = args.emit
    if emit is None:
        emit = packs.load_manifest(lang).get("default_emit", "value") \
            if wanted_packs else "value"

    parser = Parser(reg, args.input_text, session)
    try:
        outs = parser.parse(lang, entry, ())
    except EvalExit as halt:
        for line in session.out:
            print(line)
        return halt.code
    finally:
        if args.trace:
            for line in parser.trace:
                print(line, file=sys.stderr)

    for line in session.out:
        print(line)
    if emit == "trace":
        for line in parser.trace:
            print(line)
        return EXIT_OK
    if emit == "value":
        # a pack whose parse yields a generated function: invoke it to get
        # the value(s) the input denotes
        final = []
        for term in outs:
            if isinstance(term, Lam):
                final.extend(apply_value(term, (), session))
            elif isinstance(term, FragVal):
                residual = finalize(term.fragment, session)
                final.extend(apply_value(residual, (), session))
            else:
                final.append(term)
        _emit_outputs(final, "value", session)
    else:
        _emit_outputs(outs, emit, session)
    return EXIT_OK


def _build_argparser():
    top = argparse.ArgumentParser(prog="langweave", description=__doc__,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--grammar", action="append", metavar="NAME=PATH",
                       help="register a grammar file under NAME (repeatable)")
        p.add_argument("--seed", type=int, default=0,
                       help="fresh-name seed (stabilizes residual output)")

    check = sub.add_parser("check", help="validate grammars, print sets and table")
    common(check)
    check.add_argument("packs", nargs="*", help="bundled pack ids to check")
    check.set_defaults(func=cmd_check)

    expand = sub.add_parser("expand", help="print the expanded grammar")
    common(expand)
    expand.add_argument("--lang", help="which loaded grammar to print")
    expand.add_argument("packs", nargs="*", help="bundled pack id to expand")
    expand.set_defaults(func=cmd_expand)

    run = sub.add_parser("run", help="parse input and emit values or residual code")
    common(run)
    run.add_argument("positional_lang", nargs="?", metavar="LANG",
                     help="language or bundled pack id")
    run.add_argument("positional_input", nargs="?", metavar="INPUT",
                     help="inline input text")
    run.add_argument("--lang", help="language name")
    run.add_argument("--entry", help="entry rule")
    run.add_argument("--expr", help="inline input text")
    run.add_argument("--input", dest="input_file", help="read input from a file")
    run.add_argument("--emit", choices=("value", "residual", "trace"))
    run.add_argument("--steps", type=int, default=1_000_000,
                     help="evaluation step budget")
    run.add_argument("--trace", action="store_true",
                     help="print the parse trace to stderr")
    run.set_defaults(func=cmd_run)
    return top


def main(argv=None):
    top = _build_argparser()
    try:
        args = top.parse_args(argv)
    except SystemExit as exit_err:
        # argparse uses code 2 for usage problems; remap per our contract
        if exit_err.code not in (0, None):
            return EXIT_USAGE
        return 0

    if args.command == "run":
        text = args.positional_input if args.positional_input is not None else args.expr
        if text is None and args.input_file:
            text = _load_grammar_file(args.input_file)
        args.input_text = text

    try:
        return args.func(args)
    except _Usage as usage:
        print(f"usage error: {usage}", file=sys.stderr)
        return EXIT_USAGE
    except EvalExit as halt:
        # program-requested abort (staged type checks land here)
        return halt.code
    except StepBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except Ll1Conflict as exc:
        for d in exc.diagnostics:
            print(f"conflict: {d}", file=sys.stderr)
        return EXIT_PARSE
    except LangError as exc:
        from .errors import ActionError, EvalError
        if isinstance(exc, (ActionError, EvalError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ACTION
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

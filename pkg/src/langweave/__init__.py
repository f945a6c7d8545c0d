"""langweave: build LL(1) parsers from attributed grammars whose actions run
immediately during parsing, generate code through staged fragment builders,
and switch between independently defined languages mid-parse."""

__version__ = "0.1.0"

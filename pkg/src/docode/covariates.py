"""Java lexing and software-engineering covariates.

The lexer is deliberately shallow: it recognises comments, literals,
identifiers, keywords, operators and punctuation, which is enough to compute
the lexer-level metrics below without a grammar. Every count ignores comments
and literal contents.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass
from typing import Sequence

from .errors import UnterminatedCommentError, UnterminatedLiteralError

KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized this
    throw throws transient try void volatile while true false null var""".split()
)

PRIMITIVE_TYPES = frozenset("boolean byte char short int long float double var".split())
MODIFIERS = frozenset(
    "public private protected static final abstract synchronized native transient volatile strictfp".split()
)
DECISION_TOKENS = frozenset(["if", "for", "while", "case", "catch", "&&", "||", "?"])
COMPARISONS = frozenset(["==", "!=", "<", ">", "<=", ">="])
_NON_GROUPING_PAREN_OWNERS = frozenset(["if", "for", "while", "switch", "catch"])

# longest first so that maximal munch falls out of the alternation order
_OPERATORS = sorted(
    """>>>= <<= >>= >>> ... -> :: ++ -- && || == != <= >= += -= *= /= &= |= ^= %=
    << >> = + - * / % < > ! ~ ? : & |""".split() + ["^"],
    key=len,
    reverse=True,
)

_NUMBER = re.compile(
    r"""
    0[xX][0-9a-fA-F_]*(?:\.[0-9a-fA-F_]*)?(?:[pP][+-]?\d+)?[lLfFdD]?
  | 0[bB][01_]+[lL]?
  | (?:\d[\d_]*(?:\.[\d_]*)?|\.\d[\d_]*)(?:[eE][+-]?\d[\d_]*)?[lLfFdD]?
    """,
    re.VERBOSE,
)
_IDENT = re.compile(r"[^\W\d][\w$]*|\$[\w$]*")
_ANNOTATION = re.compile(r"@\s*(?:[^\W\d][\w$]*)(?:\s*\.\s*[^\W\d][\w$]*)*")


@dataclass(frozen=True)
class LexToken:
    text: str
    kind: str  # keyword, identifier, number_literal, string_literal, char_literal,
    #            operator, punctuation, comment, annotation
    start: int = 0

    @property
    def end(self) -> int:
        return self.start + len(self.text)


def _scan_quoted(source: str, pos: int, quote: str) -> int:
    """Index one past the closing quote of a string or char literal opening at ``pos``."""
    i = pos + 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\\":
            i += 2
            continue
        if ch == quote:
            return i + 1
        if ch == "\n":
            break
        i += 1
    kind = "string" if quote == '"' else "character"
    raise UnterminatedLiteralError(f"unterminated {kind} literal at offset {pos}")


def lex_java(source: str) -> list[LexToken]:
    """Tokenise Java text. Whitespace is skipped; token offsets allow reconstruction."""
    tokens: list[LexToken] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            j = n if j < 0 else j
            tokens.append(LexToken(source[i:j].rstrip("\r"), "comment", i))
            i = j
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise UnterminatedCommentError(f"unterminated block comment at offset {i}")
            tokens.append(LexToken(source[i : j + 2], "comment", i))
            i = j + 2
            continue
        if source.startswith('"""', i):
            j = i + 3
            while True:
                j = source.find('"""', j)
                if j < 0:
                    raise UnterminatedLiteralError(f"unterminated text block at offset {i}")
                if source[j - 1] != "\\":
                    break
                j += 1
            tokens.append(LexToken(source[i : j + 3], "string_literal", i))
            i = j + 3
            continue
        if ch == '"' or ch == "'":
            j = _scan_quoted(source, i, ch)
            kind = "string_literal" if ch == '"' else "char_literal"
            tokens.append(LexToken(source[i:j], kind, i))
            i = j
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            m = _NUMBER.match(source, i)
            tokens.append(LexToken(m.group(), "number_literal", i))
            i = m.end()
            continue
        if ch == "@":
            m = _ANNOTATION.match(source, i)
            if m and not source.startswith("@interface", i):
                tokens.append(LexToken(m.group(), "annotation", i))
                i = m.end()
                continue
        m = _IDENT.match(source, i)
        if m:
            word = m.group()
            tokens.append(LexToken(word, "keyword" if word in KEYWORDS else "identifier", i))
            i = m.end()
            continue
        for op in _OPERATORS:
            if source.startswith(op, i):
                tokens.append(LexToken(op, "operator", i))
                i += len(op)
                break
        else:
            # unknown characters (e.g. stray '#') are kept as punctuation
            tokens.append(LexToken(ch, "punctuation", i))
            i += 1
    return tokens


COVARIATE_NAMES = (
    "mccabe",
    "loc",
    "returns",
    "loops",
    "comparisons",
    "try_catches",
    "parenthesized_expressions",
    "numbers",
    "string_literals",
    "variables",
    "max_nested_blocks",
    "anonymous_classes",
    "inner_classes",
    "lambda_expressions",
    "unique_words",
    "log_statements",
    "modifiers",
    "subwords",
)

#: Metrics whose lexer-level rule only approximates the usual definition.
APPROXIMATE_COVARIATES = ("parenthesized_expressions", "variables")


@dataclass(frozen=True)
class CovariateVector:
    mccabe: int
    loc: int
    returns: int
    loops: int
    comparisons: int
    try_catches: int
    parenthesized_expressions: int
    numbers: int
    string_literals: int
    variables: int
    max_nested_blocks: int
    anonymous_classes: int
    inner_classes: int
    lambda_expressions: int
    unique_words: int
    log_statements: int
    modifiers: int
    subwords: int

    def as_dict(self) -> dict[str, int]:
        return asdict(self)

    def values(self, names: Sequence[str] = COVARIATE_NAMES) -> list[int]:
        return [getattr(self, name) for name in names]


def _code(tokens: Sequence[LexToken]) -> list[LexToken]:
    return [t for t in tokens if t.kind != "comment"]


def _is(tok: LexToken, text: str) -> bool:
    return tok.text == text and tok.kind in ("keyword", "operator", "punctuation")


def mccabe(tokens: Sequence[LexToken]) -> int:
    """1 + number of decision tokens (if, for, while, case, catch, &&, ||, ?)."""
    return 1 + sum(
        1
        for t in tokens
        if t.text in DECISION_TOKENS and t.kind in ("keyword", "operator")
    )


def brace_depth(tokens: Sequence[LexToken]) -> int:
    """Maximum ``{`` nesting depth."""
    depth = best = 0
    for t in _code(tokens):
        if _is(t, "{"):
            depth += 1
            best = max(best, depth)
        elif _is(t, "}"):
            depth = max(depth - 1, 0)
    return best


def _count_loops(code: list[LexToken]) -> int:
    # the trailing `while` of a braced do-while is not a second loop
    count = 0
    braces: list[bool] = []  # True for blocks opened directly after `do`
    closed_do = False
    for k, t in enumerate(code):
        if t.kind == "keyword" and t.text in ("for", "do"):
            count += 1
        elif t.kind == "keyword" and t.text == "while" and not closed_do:
            count += 1
        closed_do = False
        if _is(t, "{"):
            braces.append(k > 0 and code[k - 1].text == "do" and code[k - 1].kind == "keyword")
        elif _is(t, "}") and braces:
            closed_do = braces.pop()
    return count


def _skip_type_args(code: list[LexToken], k: int) -> int:
    """Index after a balanced ``<...>`` group starting at ``k`` (or ``k`` itself)."""
    if k >= len(code) or code[k].text != "<":
        return k
    depth = 0
    while k < len(code):
        text = code[k].text
        if text == "<":
            depth += 1
        elif text == ">":
            depth -= 1
        elif text == ">>":
            depth -= 2
        elif text == ">>>":
            depth -= 3
        elif text not in (",", ".", "?", "[", "]", "&") and code[k].kind not in ("identifier", "keyword", "annotation"):
            return k
        k += 1
        if depth <= 0:
            return k
    return k


def _type_argument_brackets(code: list[LexToken]) -> set[int]:
    """Positions of ``<``/``>`` tokens that belong to closed type-argument groups."""
    marks: set[int] = set()
    for k, t in enumerate(code):
        if t.text != "<" or k == 0 or k in marks:
            continue
        prev = code[k - 1]
        if not (prev.kind == "identifier" or prev.text == "." or prev.text in MODIFIERS):
            continue
        end = _skip_type_args(code, k)
        if end > k + 1 and code[end - 1].text in (">", ">>", ">>>"):
            marks.update(j for j in range(k, end) if code[j].text in ("<", ">", ">>", ">>>"))
    return marks


def _count_variables(code: list[LexToken]) -> int:
    """Local declarations ``Type name (=|;|,|:)`` starting a statement."""
    count = 0
    n = len(code)
    for k, t in enumerate(code):
        if not (t.kind == "identifier" or (t.kind == "keyword" and t.text in PRIMITIVE_TYPES)):
            continue
        prev = k - 1
        while prev >= 0 and code[prev].kind in ("keyword", "annotation") and (
            code[prev].text == "final" or code[prev].kind == "annotation"
        ):
            prev -= 1
        if prev >= 0:
            p = code[prev]
            at_start = _is(p, ";") or _is(p, "{") or _is(p, "}")
            if _is(p, "(") and prev > 0 and code[prev - 1].text == "for":
                at_start = True
            if not at_start:
                continue
        j = k + 1
        while j + 1 < n and code[j].text == "." and code[j + 1].kind == "identifier":
            j += 2
        j = _skip_type_args(code, j)
        while j + 1 < n and code[j].text == "[" and code[j + 1].text == "]":
            j += 2
        if j + 1 < n and code[j].kind == "identifier" and code[j + 1].text in ("=", ";", ",", ":"):
            count += 1
    return count


def _count_anonymous_classes(code: list[LexToken]) -> int:
    count = 0
    n = len(code)
    for k, t in enumerate(code):
        if not (t.kind == "keyword" and t.text == "new"):
            continue
        j = k + 1
        if j >= n or code[j].kind != "identifier":
            continue
        j += 1
        while True:
            j = _skip_type_args(code, j)
            if j + 1 < n and code[j].text == "." and code[j + 1].kind == "identifier":
                j += 2
                continue
            break
        if j >= n or not _is(code[j], "("):
            continue
        depth = 0
        while j < n:
            if _is(code[j], "("):
                depth += 1
            elif _is(code[j], ")"):
                depth -= 1
                if depth == 0:
                    break
            j += 1
        if j + 1 < n and _is(code[j + 1], "{"):
            count += 1
    return count


def extract_covariates(source: str, subword_count: int = 0) -> CovariateVector:
    """Compute the covariate vector of one Java method.

    ``subword_count`` is the token count of the matching prediction record; it
    is not derived from the source.
    """
    tokens = lex_java(source)
    code = _code(tokens)
    kw = [t.text for t in code if t.kind == "keyword"]
    generic = _type_argument_brackets(code)
    ops = [t.text for t in code if t.kind == "operator"]
    comparisons = sum(
        1 for k, t in enumerate(code) if t.kind == "operator" and t.text in COMPARISONS and k not in generic
    )
    identifiers = [t.text for t in code if t.kind == "identifier"]

    parens = 0
    for k, t in enumerate(code):
        if _is(t, "("):
            prev = code[k - 1] if k else None
            if prev is None or not (
                prev.kind == "identifier"
                or (prev.kind == "keyword" and prev.text in _NON_GROUPING_PAREN_OWNERS)
            ):
                parens += 1

    class_decls = sum(
        1
        for k, t in enumerate(code)
        if t.kind == "keyword" and t.text == "class" and not (k and code[k - 1].text == ".")
    )
    log_statements = sum(
        1
        for k, t in enumerate(code[:-1])
        if t.kind == "identifier" and t.text.lower() in ("log", "logger") and code[k + 1].text == "."
    )

    return CovariateVector(
        mccabe=mccabe(code),
        loc=sum(1 for line in source.splitlines() if line.strip()),
        returns=kw.count("return"),
        loops=_count_loops(code),
        comparisons=comparisons,
        try_catches=kw.count("catch"),
        parenthesized_expressions=parens,
        numbers=sum(1 for t in code if t.kind == "number_literal"),
        string_literals=sum(1 for t in code if t.kind == "string_literal"),
        variables=_count_variables(code),
        max_nested_blocks=max(brace_depth(code) - 1, 0),
        anonymous_classes=_count_anonymous_classes(code),
        inner_classes=max(class_decls - 1, 0),
        lambda_expressions=ops.count("->"),
        unique_words=len(set(identifiers)),
        log_statements=log_statements,
        modifiers=sum(1 for w in kw if w in MODIFIERS),
        subwords=int(subword_count),
    )

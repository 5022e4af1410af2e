"""A small parser for the restricted HTML subset used by canonical pages.

Handles standard block/inline tags with inline attributes, text nodes, and
comments. Void elements may appear unclosed, script/style contents are
dropped, and stray close tags are recovered from. What it does not try to
be: a spec-complete HTML5 parser.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field

from ..errors import ParseError

VOID_TAGS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
}
RAW_TEXT_TAGS = {"script", "style"}

_WS = re.compile(r"\s+")


def _normalize(text: str) -> str:
    return _WS.sub(" ", text).strip()


@dataclass
class DomNode:
    """An element node; `text` is the whitespace-normalized concatenation of
    the text placed directly inside it (child elements excluded)."""

    tag: str
    attrs: dict[str, str] = field(default_factory=dict)
    children: list["DomNode"] = field(default_factory=list)
    text: str = ""

    def style(self) -> str:
        return self.attrs.get("style", "")


class _Tokenizer:
    def __init__(self, source: str):
        self.source = source
        self.pos = 0
        self.n = len(source)

    def line(self, pos: int | None = None) -> int:
        end = self.pos if pos is None else pos
        return self.source.count("\n", 0, end) + 1

    def error(self, message: str, pos: int | None = None) -> ParseError:
        line = self.line(pos)
        return ParseError(f"line {line}: {message}", line=line)

    def read_until(self, needle: str, what: str) -> str:
        start = self.pos
        idx = self.source.find(needle, start)
        if idx < 0:
            raise self.error(f"unterminated {what}", start)
        self.pos = idx + len(needle)
        return self.source[start:idx]

    def read_tag_body(self) -> str:
        """Consume up to the closing '>' of a tag, honoring quoted attributes."""
        start = self.pos
        quote: str | None = None
        while self.pos < self.n:
            c = self.source[self.pos]
            if quote is not None:
                if c == quote:
                    quote = None
            elif c in "\"'":
                quote = c
            elif c == ">":
                body = self.source[start : self.pos]
                self.pos += 1
                return body
            self.pos += 1
        raise self.error("unterminated tag", start)


def _parse_attrs(rest: str) -> dict[str, str]:
    attrs: dict[str, str] = {}
    i, n = 0, len(rest)
    while i < n:
        while i < n and rest[i].isspace():
            i += 1
        if i >= n or rest[i] == "/":
            break
        start = i
        while i < n and rest[i] not in "= \t\n\r/":
            i += 1
        name = rest[start:i].casefold()
        while i < n and rest[i].isspace():
            i += 1
        value = ""
        if i < n and rest[i] == "=":
            i += 1
            while i < n and rest[i].isspace():
                i += 1
            if i < n and rest[i] in "\"'":
                quote = rest[i]
                i += 1
                start = i
                while i < n and rest[i] != quote:
                    i += 1
                value = rest[start:i]
                i += 1  # closing quote (EOF inside quotes is caught by the tokenizer)
            else:
                start = i
                while i < n and not rest[i].isspace():
                    i += 1
                value = rest[start:i]
        if name:
            attrs[name] = value
    return attrs


def parse_canonical_html(source: str) -> DomNode:
    """Parse HTML into a tree rooted at a synthetic "#document" node.

    Raises ParseError (with a line number) on input broken beyond recovery:
    EOF inside a tag, comment, quoted attribute, or raw-text element.
    """
    tok = _Tokenizer(source)
    root = DomNode("#document")
    stack: list[tuple[DomNode, list[str]]] = [(root, [])]  # (node, direct text pieces)

    def flush_text(piece: str):
        if piece:
            stack[-1][1].append(piece)

    def close_top():
        node, pieces = stack.pop()
        node.text = _normalize(html.unescape("".join(pieces)))
        stack[-1][0].children.append(node)

    text_start = 0
    while tok.pos < tok.n:
        lt = tok.source.find("<", tok.pos)
        if lt < 0:
            break
        flush_text(tok.source[text_start:lt])
        tok.pos = lt + 1

        if tok.source.startswith("!--", tok.pos):
            tok.pos += 3
            tok.read_until("-->", "comment")
        elif tok.source.startswith("!", tok.pos) or tok.source.startswith("?", tok.pos):
            tok.read_until(">", "declaration")  # <!DOCTYPE ...> and friends
        elif tok.source.startswith("/", tok.pos):
            tok.pos += 1
            body = tok.read_tag_body().strip().casefold()
            name = body.split()[0] if body else ""
            open_tags = [node.tag for node, _ in stack[1:]]
            if name in open_tags:
                while stack[-1][0].tag != name:
                    close_top()  # recover: auto-close unclosed inner elements
                close_top()
            # else: stray close tag, ignored
        else:
            body = tok.read_tag_body()
            self_closing = body.rstrip().endswith("/")
            parts = body.split(None, 1)
            if not parts:
                continue  # "<>" — ignore
            tag = parts[0].rstrip("/").casefold()
            attrs = _parse_attrs(parts[1] if len(parts) > 1 else "")
            node = DomNode(tag, attrs)
            if tag in RAW_TEXT_TAGS and not self_closing:
                tok.read_until(f"</{tag}", f"{tag} element")
                tok.read_tag_body()
                stack[-1][0].children.append(node)  # content intentionally dropped
            elif tag in VOID_TAGS or self_closing:
                stack[-1][0].children.append(node)
            else:
                stack.append((node, []))
        text_start = tok.pos

    flush_text(tok.source[text_start:])
    while len(stack) > 1:
        close_top()  # unclosed elements at EOF are tolerated
    root.text = _normalize(html.unescape("".join(stack[0][1])))
    return root

"""HTML layout DSL and applicative formlets.

The DSL builds an immutable tree of a few allowed elements and renders
it deterministically with no injected whitespace.  A formlet couples a
renderer with a collector over sequentially named fields (``f0``,
``f1``, … by render order): rendering shows inputs with defaults, and
``collect`` turns a submitted name→string map into a validated value or
an ordered error list.  Enhancers wrap the rendered markup without ever
touching collection, so a decorated form accepts exactly the same
submissions as the bare one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence, Union

I64_MIN = -(1 << 63)
I64_MAX = (1 << 63) - 1

ALLOWED_TAGS = frozenset({"div", "p", "input", "label", "span", "button",
                          "fieldset", "form"})
VOID_TAGS = frozenset({"input"})


@dataclass(frozen=True)
class Text:
    content: str


@dataclass(frozen=True)
class Element:
    tag: str
    attrs: tuple[tuple[str, str], ...] = ()
    children: tuple["Html", ...] = ()

    def __post_init__(self):
        if self.tag not in ALLOWED_TAGS:
            raise ValueError(f"tag not allowed: {self.tag}")
        names = [n for n, _ in self.attrs]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate attribute on <{self.tag}>")
        if self.tag in VOID_TAGS and self.children:
            raise ValueError(f"<{self.tag}> cannot have children")


Html = Union[Element, Text]


def _node(tag: str, *children: Html, **attrs: str) -> Element:
    return Element(tag, tuple(attrs.items()), tuple(children))


def div(*children: Html, **attrs: str) -> Element:
    return _node("div", *children, **attrs)


def p(*children: Html, **attrs: str) -> Element:
    return _node("p", *children, **attrs)


def span(*children: Html, **attrs: str) -> Element:
    return _node("span", *children, **attrs)


def label(*children: Html, **attrs: str) -> Element:
    return _node("label", *children, **attrs)


def button(*children: Html, **attrs: str) -> Element:
    return _node("button", *children, **attrs)


def fieldset(*children: Html, **attrs: str) -> Element:
    return _node("fieldset", *children, **attrs)


def form(*children: Html, **attrs: str) -> Element:
    return _node("form", *children, **attrs)


def input_el(**attrs: str) -> Element:
    return _node("input", **attrs)


def escape_text(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;")
             .replace(">", "&gt;").replace('"', "&quot;"))


def render_html(h: Html) -> str:
    if isinstance(h, Text):
        return escape_text(h.content)
    attrs = "".join(f' {n}="{escape_text(v)}"' for n, v in h.attrs)
    if h.tag in VOID_TAGS:
        return f"<{h.tag}{attrs} />"
    inner = "".join(render_html(c) for c in h.children)
    return f"<{h.tag}{attrs}>{inner}</{h.tag}>"


# ------------------------------------------------------------ results

@dataclass(frozen=True)
class Ok:
    value: object


@dataclass(frozen=True)
class Err:
    errors: tuple[tuple[str, str], ...]


def field_name(index: int) -> str:
    return f"f{index}"


# ------------------------------------------------------------ formlets

class Formlet:
    """A renderer/collector pair over ``field_count`` sequential fields.

    ``_fragment(i)`` yields the sibling nodes starting at field index
    ``i``; ``render_at(i)`` gives a single rooted tree (fragments of
    more than one node are rooted in a div).  ``collect`` reads the
    same field names the renderer emitted.
    """

    def __init__(self, field_count: int,
                 fragment: Callable[[int], tuple[Html, ...]],
                 collect_at: Callable[[int, Mapping[str, str]], Union[Ok, Err]]):
        self.field_count = field_count
        self._fragment = fragment
        self._collect_at = collect_at

    def fragment(self, first_index: int = 0) -> tuple[Html, ...]:
        return self._fragment(first_index)

    def render_at(self, first_index: int = 0) -> Html:
        nodes = self._fragment(first_index)
        if len(nodes) == 1:
            return nodes[0]
        return div(*nodes)

    def render(self) -> str:
        return render_html(self.render_at(0))

    def collect(self, inputs: Mapping[str, str]) -> Union[Ok, Err]:
        return self._collect_at(0, inputs)

    def collect_at(self, first_index: int,
                   inputs: Mapping[str, str]) -> Union[Ok, Err]:
        return self._collect_at(first_index, inputs)


def run_formlet(f: Formlet, inputs: Mapping[str, str]) -> Union[Ok, Err]:
    """Simulated submission: collect over the submitted name→string map."""
    return f.collect(inputs)


def input_formlet(default: str) -> Formlet:
    """One text field; missing submissions fall back to the default."""

    def fragment(i: int) -> tuple[Html, ...]:
        return (input_el(type="text", name=field_name(i), value=default),)

    def collect_at(i: int, inputs: Mapping[str, str]) -> Ok:
        return Ok(inputs.get(field_name(i), default))

    return Formlet(1, fragment, collect_at)


def map_formlet(f: Formlet, fn: Callable) -> Formlet:
    def collect_at(i: int, inputs: Mapping[str, str]):
        got = f.collect_at(i, inputs)
        return Ok(fn(got.value)) if isinstance(got, Ok) else got

    return Formlet(f.field_count, f.fragment, collect_at)


def pair_formlet(a: Formlet, b: Formlet) -> Formlet:
    """Both sides rendered a-then-b in one div and always both collected."""

    def fragment(i: int) -> tuple[Html, ...]:
        return (div(*a.fragment(i), *b.fragment(i + a.field_count)),)

    def collect_at(i: int, inputs: Mapping[str, str]):
        ra = a.collect_at(i, inputs)
        rb = b.collect_at(i + a.field_count, inputs)
        if isinstance(ra, Ok) and isinstance(rb, Ok):
            return Ok((ra.value, rb.value))
        errors = (ra.errors if isinstance(ra, Err) else ())
        errors += (rb.errors if isinstance(rb, Err) else ())
        return Err(errors)

    return Formlet(a.field_count + b.field_count, fragment, collect_at)


def _is_int_text(s: str) -> bool:
    body = s[1:] if s.startswith("-") else s
    if not body or not body.isascii() or not body.isdigit():
        return False
    return I64_MIN <= int(s) <= I64_MAX


def validate(f: Formlet, predicate: str, message: str) -> Formlet:
    """Attach a named validator; ``isInt`` parses the string to an int."""
    if predicate != "isInt":
        raise ValueError(f"unknown validator: {predicate}")
    return is_int(f, message)


def is_int(f: Formlet, message: str) -> Formlet:
    def collect_at(i: int, inputs: Mapping[str, str]):
        got = f.collect_at(i, inputs)
        if not isinstance(got, Ok):
            return got
        text = got.value
        if isinstance(text, str) and _is_int_text(text):
            return Ok(int(text))
        return Err(((field_name(i), message),))

    return Formlet(f.field_count, f.fragment, collect_at)


# ------------------------------------------------------------ enhancers

def _enhanced(f: Formlet,
              wrap: Callable[[int, tuple[Html, ...]], tuple[Html, ...]]) -> Formlet:
    def fragment(i: int) -> tuple[Html, ...]:
        return wrap(i, f.fragment(i))

    return Formlet(f.field_count, fragment, f.collect_at)


def with_text_label(f: Formlet, text: str) -> Formlet:
    """Prepend ``<label for="f<i>">text</label>``."""
    return _enhanced(f, lambda i, nodes:
                     (label(Text(text), **{"for": field_name(i)}),) + nodes)


def with_validation_icon(f: Formlet) -> Formlet:
    """Append ``<span class="validation-icon"></span>``."""
    return _enhanced(f, lambda i, nodes:
                     nodes + (span(**{"class": "validation-icon"}),))


def with_submit_and_reset_buttons(f: Formlet) -> Formlet:
    """Append a div holding Submit and Reset buttons."""
    buttons = div(button(Text("Submit"), type="submit"),
                  button(Text("Reset"), type="reset"))
    return _enhanced(f, lambda i, nodes: nodes + (buttons,))


def with_form_container(f: Formlet) -> Formlet:
    """Wrap everything in ``<fieldset class="form-container">``."""
    return _enhanced(f, lambda i, nodes:
                     (fieldset(*nodes, **{"class": "form-container"}),))


# ------------------------------------------------------------ demo page

def demo_formlet() -> Formlet:
    """The int-entry formlet with every enhancer applied in order."""
    f = is_int(input_formlet("100"), "Must be int")
    f = with_text_label(f, "Enter max number:")
    f = with_validation_icon(f)
    f = with_submit_and_reset_buttons(f)
    return with_form_container(f)


def retrieve_panel() -> Element:
    """The declarative layout example: a prompt and a button."""
    return div(
        p(Text("Press to retrieve data")),
        input_el(type="Button", value="Get Data"),
    )


def demo_page() -> str:
    """Static composite page: layout panel plus the enhanced formlet."""
    page = div(
        retrieve_panel(),
        form(demo_formlet().render_at(0)),
    )
    return render_html(page) + "\n"

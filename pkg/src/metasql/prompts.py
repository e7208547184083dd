"""Prompt assembly from pinned text templates.

The templates under templates/ are byte-exact assets: generation
quality and the recorded cassettes both depend on their exact layout,
trailing spaces included. Assembly only ever substitutes placeholders
or removes whole optional sections; it never reflows text.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

from .catalog import SchemaCatalog, render_table_block
from .demos import Demonstration
from .viz import VIZ_TYPE_NAMES

_SCHEMA_SECTION = ("### Here is the information about the tables:\n"
                   "{schema_info}\n\n")
_DEMO_SECTION = ("### Some example pairs of questions and corresponding SQL "
                 "queries (these examples might use functions from other "
                 "dialects) are provided below:\n{fewshot_demo}\n\n")
_COT_TAIL = "### SQL: Let's think step-by-step."
_PLAIN_TAIL = "### SQL:"


def load_template(name: str) -> str:
    path = resources.files("metasql").joinpath("templates") \
        .joinpath(f"{name}.txt")
    return path.read_text(encoding="utf-8")


def token_estimate(text: str) -> int:
    # ~4 characters per token; used for logging only, never for truncation
    return (len(text) + 3) // 4


@dataclass
class PromptBundle:
    text: str
    question: str
    kind: str = "sql"  # sql | retry | viz
    demo_ids: list[str] = field(default_factory=list)
    include_schema: bool = True
    include_cot: bool = True
    token_estimate: int = 0


def render_prompt_schema(catalog: SchemaCatalog) -> str:
    """All table blocks in lexicographic table order, blank line between."""
    tables = sorted(catalog.tables, key=lambda t: t.name.lower())
    return "\n\n".join(render_table_block(t) for t in tables)


def render_demo(demo: Demonstration) -> str:
    """One demonstration block: question, step-by-step table list, SQL."""
    template = load_template("demo_block")
    tables = "\n".join(f"-- {t}" for t in demo.relevant_tables)
    text = (template
            .replace("{question}", demo.question)
            .replace("{tables}", tables)
            .replace("{sql}", demo.sql))
    return text.rstrip("\n")


def render_demos(demos: list[Demonstration]) -> str:
    return "\n\n".join(render_demo(d) for d in demos)


def build_sql_prompt(question: str, catalog: SchemaCatalog,
                     demos: list[Demonstration], *,
                     include_schema: bool = True,
                     include_cot: bool = True) -> PromptBundle:
    """Assemble the SQL-generation prompt.

    Demos must already be in retrieval order (decreasing similarity);
    schema blocks are listed in lexicographic table order. Switching
    off include_schema removes the whole schema section, and an empty
    demo list removes the example section the same way.
    """
    template = load_template("sql_prompt")
    if not include_schema:
        template = template.replace(_SCHEMA_SECTION, "")
    if not demos:
        template = template.replace(_DEMO_SECTION, "")
    text = template
    if include_schema:
        schema_info = render_prompt_schema(catalog)
        text = text.replace("{schema_info}", schema_info)
    if demos:
        text = text.replace("{fewshot_demo}", render_demos(demos))
    text = text.replace("{question}", question).rstrip("\n")
    if not include_cot:
        assert text.endswith(_COT_TAIL)
        text = text[: -len(_COT_TAIL)] + _PLAIN_TAIL
    return PromptBundle(text=text, question=question, kind="sql",
                        demo_ids=[d.id for d in demos],
                        include_schema=include_schema,
                        include_cot=include_cot,
                        token_estimate=token_estimate(text))


def build_retry_prompt(bundle: PromptBundle, failed_sql: str,
                       error: str) -> PromptBundle:
    """Original prompt plus a failure section naming the query and error."""
    section = (load_template("retry_section")
               .replace("{sql}", failed_sql)
               .replace("{error}", error)
               .rstrip("\n"))
    text = bundle.text + "\n\n" + section
    return PromptBundle(text=text, question=bundle.question, kind="retry",
                        demo_ids=list(bundle.demo_ids),
                        include_schema=bundle.include_schema,
                        include_cot=bundle.include_cot,
                        token_estimate=token_estimate(text))


def build_viz_prompt(question: str, columns: list[str]) -> PromptBundle:
    """Assemble the visualization prompt over a result's column names."""
    text = (load_template("viz_prompt")
            .replace("{viz_names}", ", ".join(VIZ_TYPE_NAMES))
            .replace("{columns}", "\n".join(columns))
            .replace("{question}", question)
            .rstrip("\n"))
    return PromptBundle(text=text, question=question, kind="viz",
                        token_estimate=token_estimate(text))

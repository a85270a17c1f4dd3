"""Fenced-output corpus for the code bundle parser.

Each case is (label, model_output, expected_paths, expected_replaced).
"""

from __future__ import annotations

HTML = "<!DOCTYPE html>\n<html><body></body></html>"
CSS = "body { margin: 0; }"
JS = "const x = 1;\nconsole.log(x);"
PY = "def main():\n    return 1"


def fence(lang, body, header=None, ticks="```"):
    head = f"{header}\n" if header else ""
    return f"{ticks}{lang}\n{head}{body}\n{ticks}"


def _cases():
    c = []
    # headers in each comment style
    c.append(("html-comment header", fence("html", HTML, "<!-- index.html -->"), {"index.html"}, 0))
    c.append(("css-comment header", fence("css", CSS, "/* styles/main.css */"), {"styles/main.css"}, 0))
    c.append(("slash header", fence("javascript", JS, "// src/app.js"), {"src/app.js"}, 0))
    c.append(("hash header", fence("python", PY, "# game/board.py"), {"game/board.py"}, 0))
    c.append(("file: prefix", fence("js", JS, "// file: lib/util.js"), {"lib/util.js"}, 0))
    c.append(("filename: prefix", fence("python", PY, "# Filename: tools.py"), {"tools.py"}, 0))
    c.append(("header after blank line", fence("css", "\n" + CSS, None).replace("```css\n", "```css\n\n/* a.css */"),
              {"a.css"}, 0))
    # default-name mapping without headers
    for lang, name in (("html", "index.html"), ("css", "style.css"), ("js", "script.js"),
                       ("javascript", "script.js"), ("python", "main.py"), ("py", "main.py")):
        c.append((f"default {lang}", fence(lang, "x = 1"), {name}, 0))
    c.append(("three unheaded", "\n".join(fence(l, b) for l, b in (("html", HTML), ("css", CSS), ("js", JS))),
              {"index.html", "style.css", "script.js"}, 0))
    c.append(("uppercase tag", fence("HTML", HTML), {"index.html"}, 0))
    # ordinal fallback
    c.append(("no tag", fence("", "plain"), {"file_1.txt"}, 0))
    c.append(("unknown tag", fence("rust", "fn main() {}"), {"file_1.txt"}, 0))
    c.append(("ordinal counts blocks", fence("html", HTML) + "\n" + fence("text", "x"), {"index.html", "file_2.txt"}, 0))
    c.append(("comment that is not a path", fence("js", JS, "// entry point"), {"script.js"}, 0))
    c.append(("hash comment prose", fence("python", PY, "# main game loop"), {"main.py"}, 0))
    # mixed
    c.append(("mixed headed and not", fence("html", HTML, "<!-- page.html -->") + "\n" + fence("css", CSS),
              {"page.html", "style.css"}, 0))
    c.append(("prose around blocks", "Here you go:\n\n" + fence("js", JS, "// a.js") + "\n\nEnjoy!", {"a.js"}, 0))
    c.append(("tilde fence", fence("python", PY, "# t.py", ticks="~~~"), {"t.py"}, 0))
    c.append(("four backticks", fence("js", "```\nnested\n```", "// n.js", ticks="````"), {"n.js"}, 0))
    c.append(("info string extras", "```js title=x\n// x.js\nlet a;\n```", {"x.js"}, 0))
    c.append(("unclosed final fence", "```css\n/* u.css */\nbody {}", {"u.css"}, 0))
    c.append(("empty block", "```js\n```", {"script.js"}, 0))
    c.append(("nested dirs", fence("js", JS, "// a/b/c/d.js"), {"a/b/c/d.js"}, 0))
    c.append(("windows separators", fence("js", JS, "// src\\win\\app.js"), {"src/win/app.js"}, 0))
    c.append(("dot segment", fence("js", JS, "// ./src/./x.js"), {"src/x.js"}, 0))
    # duplicates
    c.append(("duplicate headed", fence("js", "a", "// s.js") + "\n" + fence("js", "b", "// s.js"), {"s.js"}, 1))
    c.append(("duplicate defaults", fence("css", "a") + "\n" + fence("css", "b"), {"style.css"}, 1))
    c.append(("triple duplicate", "\n".join(fence("html", str(i)) for i in range(3)), {"index.html"}, 2))
    c.append(("header equals default", fence("html", "a", "<!-- index.html -->") + "\n" + fence("html", "b"),
              {"index.html"}, 1))
    c.append(("js and javascript collide", fence("js", "a") + "\n" + fence("javascript", "b"), {"script.js"}, 1))
    # adversarial paths
    c.append(("parent escape", fence("js", JS, "// ../../etc/passwd.js"), {"etc/passwd.js"}, 0))
    c.append(("absolute posix", fence("python", PY, "# /etc/cron.py"), {"etc/cron.py"}, 0))
    c.append(("absolute windows", fence("js", JS, "// C:\\Windows\\evil.js"), {"Windows/evil.js"}, 0))
    c.append(("inner parent", fence("css", CSS, "/* a/../../b.css */"), {"a/b.css"}, 0))
    c.append(("backslash parent", fence("html", HTML, "<!-- ..\\..\\x.html -->"), {"x.html"}, 0))
    c.append(("dotted name kept", fence("js", JS, "// ../../..js"), {"..js"}, 0))
    c.append(("colon in segment", fence("js", JS, "// a/b:c.js"), {"script.js"}, 0))
    c.append(("history dir", fence("js", JS, "// .history/x.js"), {"script.js"}, 0))
    c.append(("double slash", fence("js", JS, "// a//b.js"), {"a/b.js"}, 0))
    c.append(("escape then legit", fence("js", "a", "// ../x.js") + "\n" + fence("js", "b", "// x.js"), {"x.js"}, 1))
    c.append(("url like", fence("js", JS, "// http://evil/x.js"), {"script.js"}, 0))
    c.append(("home tilde", fence("js", JS, "// ~/x.js"), {"script.js"}, 0))
    c.append(("padded header", fence("js", JS, "//   spaced.js   "), {"spaced.js"}, 0))
    c.append(("escape in every block", "\n".join(fence("js", str(i), f"// ../{i}.js") for i in range(3)),
              {"0.js", "1.js", "2.js"}, 0))
    c.append(("deep escape", fence("python", PY, "# " + "../" * 20 + "root.py"), {"root.py"}, 0))
    return c


CORPUS = _cases()

import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sanisim import Scheme
from sanisim.errors import ParseError
from sanisim.trace import Command, format_command, parse_line, parse_trace

# independent acceptor for the trace grammar
_U = r"[0-9]+"
_GRAMMAR = [
    rf"write ({_U}) (rand|[0-9a-fA-F]+)",
    rf"read ({_U})",
    rf"trim ({_U}) ({_U})",
    rf"sdelete ({_U}) (scrub|overwrite|downbit|pulse|ecc)",
    rf"pulse ({_U}) ({_U})",
    r"gc",
    r"scan (decode|raw)",
    rf"compare ({_U}(?:,{_U})*) ({_U})",
    r"report",
]


def accepts(line: str) -> bool:
    body = " ".join(line.split("#", 1)[0].split())
    if not body:
        return True
    for pat in _GRAMMAR:
        m = re.fullmatch(pat, body)
        if m:
            nums = [int(x) for g in m.groups() for x in g.split(",") if re.fullmatch(_U, x)]
            if any(n >= 1 << 64 for n in nums):
                return False
            if body.startswith("compare") and int(m.group(2)) == 0:
                return False
            return True
    return False


def test_examples():
    assert len(parse_trace("write 3 rand\nread 3")) == 2
    assert parse_line("sdelete 3 ecc") == Command("sdelete", lpa=3, scheme=Scheme.CODE_MODULATED)
    with pytest.raises(ParseError) as exc:
        parse_trace("read")
    assert exc.value.line == 1


def test_comments_and_blank_lines():
    cmds = parse_trace("# header\n\nwrite 1 ab  # trailing\n   \ngc\n")
    assert [c.op for c in cmds] == ["write", "gc"]


@pytest.mark.parametrize("text,line,token", [
    ("write 1 rand\nfrob 2", 2, "frob"),
    ("read 1 2", 1, "2"),
    ("read -1", 1, "-1"),
    ("read 18446744073709551616", 1, "18446744073709551616"),
    ("write 0 xyz", 1, "xyz"),
    ("sdelete 0 shred", 1, "shred"),
    ("scan fast", 1, "fast"),
    ("compare 0,,1 5", 1, ""),
    ("compare 0 0", 1, "0"),
    ("\n\ntrim 4", 3, "<end of line>"),
])
def test_errors_carry_line_and_token(text, line, token):
    with pytest.raises(ParseError) as exc:
        parse_trace(text)
    assert exc.value.line == line
    assert exc.value.token == token


def test_u64_bounds():
    assert parse_line("read 18446744073709551615").lpa == (1 << 64) - 1


VOCAB = ["write", "read", "trim", "sdelete", "pulse", "gc", "scan", "compare", "report",
         "0", "7", "18446744073709551615", "18446744073709551616", "-3", "1.5", "ab", "ZZ",
         "rand", "scrub", "overwrite", "downbit", "ecc", "decode", "raw", "1,2", "3,", ",", "#", "x#y"]


@settings(max_examples=400)
@given(st.lists(st.sampled_from(VOCAB), min_size=0, max_size=4), st.sampled_from([" ", "  ", "\t"]))
def test_grammar_totality(tokens, sep):
    line = sep.join(tokens)
    if accepts(line):
        cmd = parse_line(line)
        if cmd is not None:
            assert parse_line(format_command(cmd)) == cmd
    else:
        with pytest.raises(ParseError):
            parse_line(line)


u64 = st.integers(0, (1 << 64) - 1)
commands = st.one_of(
    st.builds(lambda a, p: Command("write", lpa=a, payload=p), u64,
              st.one_of(st.just("rand"), st.text("0123456789abcdefABCDEF", min_size=1, max_size=16))),
    st.builds(lambda a: Command("read", lpa=a), u64),
    st.builds(lambda a, b: Command("trim", lpa=a, lpa_to=b), u64, u64),
    st.builds(lambda a, s: Command("sdelete", lpa=a, scheme=s), u64, st.sampled_from(list(Scheme))),
    st.builds(lambda a, n: Command("pulse", lpa=a, count=n), u64, u64),
    st.just(Command("gc")),
    st.builds(lambda m: Command("scan", mode=m), st.sampled_from(["decode", "raw"])),
    st.builds(lambda ls, n: Command("compare", lpas=tuple(ls), count=n),
              st.lists(u64, min_size=1, max_size=5), st.integers(1, 1000)),
    st.just(Command("report")),
)


@given(st.lists(commands, max_size=10))
def test_round_trip(cmds):
    text = "\n".join(format_command(c) for c in cmds)
    assert parse_trace(text) == cmds

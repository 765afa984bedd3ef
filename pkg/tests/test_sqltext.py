"""Statement splitting and tokenizing."""

from hypothesis import given, settings, strategies as st

from sqltestkit.sqltext import find_psql_variables, split_statements, tokenize


def texts(chunks):
    return [c.text.strip() for c in chunks]


class TestSplitter:
    def test_plain(self):
        assert texts(split_statements("SELECT 1; SELECT 2;")) == ["SELECT 1", "SELECT 2"]

    def test_quotes_and_comments(self):
        sql = "SELECT 'a;b'; -- c;d\nSELECT \"x;y\" /* ; */ FROM t;"
        assert len(split_statements(sql)) == 2

    def test_dollar_body(self):
        sql = "CREATE FUNCTION f() RETURNS int AS $$ SELECT 1; SELECT 2; $$ LANGUAGE sql;\nSELECT f();"
        out = texts(split_statements(sql))
        assert len(out) == 2
        assert "SELECT 2; $$" in out[0]

    def test_tagged_dollar_body(self):
        sql = "DO $body$ BEGIN PERFORM 1; END $body$;\nSELECT 1;"
        assert len(split_statements(sql)) == 2

    def test_trailing_statement_without_semicolon(self):
        assert texts(split_statements("SELECT 1; SELECT 2")) == ["SELECT 1", "SELECT 2"]

    def test_empty(self):
        assert split_statements("") == []


_atom = st.text(alphabet="abc xyz019", min_size=1, max_size=8)


@st.composite
def statements_with_quoted_semicolons(draw):
    parts = []
    for _ in range(draw(st.integers(1, 5))):
        kind = draw(st.sampled_from(["single", "double", "dollar", "line", "block"]))
        inner = draw(_atom) + ";" + draw(_atom)
        if kind == "single":
            parts.append(f"SELECT '{inner}'")
        elif kind == "double":
            parts.append(f'SELECT "{inner}" FROM t')
        elif kind == "dollar":
            parts.append(f"SELECT $q${inner}$q$")
        elif kind == "line":
            parts.append(f"SELECT 1 -- {inner}\n")
        else:
            parts.append(f"SELECT /* {inner} */ 1")
    return parts


class TestSplitterProperty:
    @settings(max_examples=300, deadline=None)
    @given(statements_with_quoted_semicolons())
    def test_injected_semicolons_do_not_split(self, parts):
        sql = ";\n".join(parts) + ";"
        assert len(split_statements(sql)) == len(parts)


class TestTokenize:
    def test_operators(self):
        toks = [t.text for t in tokenize("a>=1 AND b::int <> 'x y'")]
        assert toks == ["a", ">=", "1", "AND", "b", "::", "int", "<>", "'x y'"]

    def test_psql_variables(self):
        assert find_psql_variables("AS :'regresslib', :x, '::y', a::int") == ["regresslib", "x"]

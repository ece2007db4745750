"""Column Normal Form: one key relation plus one (id, value) relation per column."""

from __future__ import annotations

from dataclasses import dataclass

from colsem.core import Database, Relation
from colsem.errors import DanglingId, NameCollision

ID = "id"


def key_name(base: str) -> str:
    return f"{base}_{ID}"


def column_name(base: str, attr: str) -> str:
    return f"{base}_{attr}"


@dataclass
class NormalizedGroup:
    """A relation in Column Normal Form.

    ``columns`` keeps the original ``(attr, type)`` order so recomposition can
    restore it; ``column_rels`` maps each attribute to its ``(id, attr)``
    relation.
    """

    base_name: str
    columns: tuple
    key_rel: Relation
    column_rels: dict

    @property
    def ids(self) -> list:
        return [row[0] for row in self.key_rel.rows]

    def relations(self) -> list:
        return [self.key_rel] + [self.column_rels[a] for a, _ in self.columns]

    def validate(self):
        ids = self.ids
        if len(set(ids)) != len(ids):
            raise ValueError(f"{self.key_rel.name}: duplicate ids")
        known = set(ids)
        for attr, _ in self.columns:
            rel = self.column_rels[attr]
            seen = set()
            for i, v in rel.rows:
                if i not in known:
                    raise DanglingId(f"{rel.name}: id {i} is not in {self.key_rel.name}")
                if i in seen:
                    raise ValueError(f"{rel.name}: id {i} has more than one value")
                if v is None:
                    raise ValueError(f"{rel.name}: Null value for id {i}")
                seen.add(i)


def decompose(r: Relation, base_name: str = None) -> NormalizedGroup:
    """Split ``r`` into a key relation and one null-free relation per column.

    Rows get ids 1, 2, ... in row order; duplicate rows get distinct ids and
    all-Null rows survive only in the key relation.
    """
    base = base_name or r.name
    ids = list(range(1, len(r.rows) + 1))
    key_rel = Relation(key_name(base), ((ID, "int"),), [(i,) for i in ids])
    column_rels = {}
    for pos, (attr, typ) in enumerate(r.columns):
        rows = [(i, row[pos]) for i, row in zip(ids, r.rows) if row[pos] is not None]
        column_rels[attr] = Relation(column_name(base, attr), ((ID, "int"), (attr, typ)), rows)
    return NormalizedGroup(base, r.columns, key_rel, column_rels)


def normalize_output(rel: Relation) -> NormalizedGroup:
    """Same as ``decompose``; the entry point used on query results."""
    return decompose(rel)


def full_outer_join_group(g: NormalizedGroup) -> Relation:
    """Reassemble the classic relation, filling absent entries with Null."""
    known = set(g.ids)
    lookups = []
    for attr, _ in g.columns:
        rel = g.column_rels[attr]
        values = {}
        for i, v in rel.rows:
            if i not in known:
                raise DanglingId(f"{rel.name}: id {i} is not in {g.key_rel.name}")
            if i in values:
                raise ValueError(f"{rel.name}: id {i} has more than one value")
            values[i] = v
        lookups.append(values)
    rows = [tuple(values.get(i) for values in lookups) for i in g.ids]
    return Relation(g.base_name, g.columns, rows)


class NormalizedDatabase(dict):
    """Base relation name to NormalizedGroup."""

    def relations(self) -> Database:
        """The flat catalog of normalized relations (``R_id``, ``R_a``, ...)."""
        return Database(rel for g in self.values() for rel in g.relations())

    def catalog(self) -> dict:
        """Catalog of the *original* relations the groups stand for."""
        return {name: g.columns for name, g in self.items()}


def generated_names(name: str, columns) -> list:
    return [key_name(name)] + [column_name(name, a) for a, _ in columns]


def decompose_db(db: Database) -> NormalizedDatabase:
    taken = set(db)
    out = NormalizedDatabase()
    for name, r in db.items():
        for generated in generated_names(name, r.columns):
            if generated in taken:
                raise NameCollision(generated)
            taken.add(generated)
    for name, r in db.items():
        out[name] = decompose(r)
    return out


def recompose_db(ndb: NormalizedDatabase) -> Database:
    return Database(full_outer_join_group(g) for g in ndb.values())


def groups_equivalent(a: NormalizedGroup, b: NormalizedGroup) -> bool:
    """Equal up to a bijective renaming of opaque ids.

    Each id determines one reconstructed row, so a bijection exists exactly
    when the recomposed rows agree as multisets.
    """
    if tuple(a.columns) != tuple(b.columns):
        return False
    return full_outer_join_group(a).bag() == full_outer_join_group(b).bag()

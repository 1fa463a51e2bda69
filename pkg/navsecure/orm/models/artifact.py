from peewee import CharField, ForeignKeyField

from navsecure.orm.models.base_model import BaseModel
from navsecure.orm.models.run import Run


class Artifact(BaseModel):
    """
    A file written by a :class:`Run`.
    """
    run: int = ForeignKeyField(Run, backref="artifacts", help_text="Run that wrote the file.")
    kind: str = CharField(help_text="checkpoint, diagnostics, episodes, report, curve, figure, table or scenario.")
    path: str = CharField(help_text="Location of the file relative to the output directory.")
    fingerprint: str = CharField(help_text="Configuration fingerprint embedded in the file.")

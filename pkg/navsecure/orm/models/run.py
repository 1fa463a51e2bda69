import datetime

from peewee import AutoField, BooleanField, CharField, DateTimeField, IntegerField

from navsecure.orm.fields.integer_list_field import IntegerListField
from navsecure.orm.models.base_model import BaseModel


class Run(BaseModel):
    """
    One invocation of a command that wrote into the output directory.
    """
    id: int = AutoField()
    command: str = CharField(help_text="Command that was run, e.g. train or evaluate.")
    fingerprint: str = CharField(help_text="Fingerprint of the configuration the run used.")
    seed: int = IntegerField(help_text="Seed the run was started with.")
    scenario: str = CharField(default="", help_text="Stage, catalogue name or spec file the run drove on.")
    dimensions: list = IntegerListField(
        default=list, help_text="Observation, action, deterministic and stochastic state sizes of the model used.")
    started: datetime.datetime = DateTimeField(default=datetime.datetime.now, help_text="When the run started.")
    finished: bool = BooleanField(default=False, help_text="Whether the run completed without an error.")
    status: str = CharField(default="running", help_text="running, finished, or the error that stopped the run.")

from peewee import CharField, FloatField, ForeignKeyField, IntegerField

from navsecure.orm.models.base_model import BaseModel
from navsecure.orm.models.run import Run


class MetricsRecord(BaseModel):
    """
    Headline metrics of one evaluation, so runs can be listed without reading their report files.
    """
    run: int = ForeignKeyField(Run, backref="metrics", help_text="Evaluation run the metrics came from.")
    name: str = CharField(help_text="Row name of the report, e.g. train or deploy.")
    mpi: float = FloatField(help_text="Meters per intervention.")
    tt: float = FloatField(null=True, help_text="Mean travel time in seconds, empty when no episode completed.")
    sr: float = FloatField(help_text="Success rate in percent.")
    std_v: float = FloatField(help_text="Standard deviation of speed in m/s.")
    episodes: int = IntegerField(help_text="Number of evaluation episodes.")

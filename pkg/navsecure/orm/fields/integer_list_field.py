from typing import List, Union

from peewee import Field


class IntegerListField(Field):
    """
    A list of integers, stored as a comma separated string.
    """
    field_type = "INTEGER_LIST"

    def db_value(self, value: List[int]) -> str:
        """
        Transforms the incoming list of integers into a comma separated string for storage.

        :param value: Integers to transform.
        :return: A comma separated string representing the integers provided.
        """
        return ",".join(map(str, value))

    def python_value(self, value: Union[str, int]) -> List[int]:
        """
        Transforms the retrieved comma separated string back into a list of integers.

        :param value: A comma separated string representing the integer list desired.
        :return: The integers within the string as a list, delimited by commas.
        """
        if value is None or value == "":
            return []

        # SQLite hands a single stored value such as "64" back as an int, which is already what we want.
        if type(value) is int:
            return [value]

        return [int(part) for part in value.split(",")]

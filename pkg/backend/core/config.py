"""
Validated configuration models.

Every parameter object in the lab is a frozen pydantic model built through
``LabConfig.create``, so invalid values surface as ConfigError instead of
pydantic's own exception type.
"""

from typing import Type, TypeVar

from pydantic import BaseModel, ConfigDict, ValidationError

from core.errors import ConfigError

T = TypeVar("T", bound="LabConfig")


class LabConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    @classmethod
    def create(cls: Type[T], **values) -> T:
        return build_config(cls, **values)

    def replace(self: T, **changes) -> T:
        return build_config(type(self), **{**self.model_dump(), **changes})


def build_config(model: Type[T], **values) -> T:
    try:
        return model(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or model.__name__}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid {model.__name__}: {problems}") from e

"""Pydantic schemas for the JSON-over-HTTP model server protocol."""
from pydantic import BaseModel, Field


class CaptionRequest(BaseModel):
    """POST /caption"""
    model_config = {"extra": "forbid"}
    image_ppm_b64: str = Field(description="Base64 of a binary PPM/PGM")


class CaptionResponse(BaseModel):
    text: str


class GenerateRequest(BaseModel):
    """POST /generate"""
    model_config = {"extra": "forbid"}
    prompt: str
    seed: int = Field(ge=0, lt=2**64)
    width: int = Field(ge=16)
    height: int = Field(ge=16)


class GenerateResponse(BaseModel):
    image_ppm_b64: str


class EmbedRequest(BaseModel):
    """POST /embed"""
    model_config = {"extra": "forbid"}
    image_ppm_b64: str


class EmbedResponse(BaseModel):
    vector: list[float] = Field(min_length=1)


class ErrorResponse(BaseModel):
    """Body of any non-200 reply."""
    error: str

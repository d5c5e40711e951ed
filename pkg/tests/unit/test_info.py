"""Unit tests for the /info endpoint."""

import pytest

from api.main import VERSION, InfoResponse, get_info


@pytest.mark.asyncio
async def test_get_info_returns_version():
    """Test that get_info returns the correct version."""
    result = await get_info()

    assert isinstance(result, InfoResponse)
    assert result.version == VERSION


@pytest.mark.asyncio
async def test_get_info_lists_capabilities():
    """Test that get_info lists commands, models, schemes and presets."""
    result = await get_info()

    assert "audit" in result.commands
    assert "simulate" in result.commands
    assert result.models == ["full", "intermediate", "soundproof"]
    assert result.schemes == ["exponential_rk4", "classical_rk4"]
    assert result.presets == ["desk", "smoke", "tiny"]

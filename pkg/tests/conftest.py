from steerbench.gateway import ChatResponse, Gateway, Live
from steerbench.sandbox import Sandbox, SandboxLimits
from steerbench.steering import ModelCapabilities, PromptAssets, SteeringDeps

_ASSETS = PromptAssets.load()


def scripted_response(text):
    return ChatResponse(
        text=text,
        prompt_tokens=50,
        completion_tokens=max(1, len(text) // 4),
        latency_ms=100,
    )


def make_deps(transport, timeout_s=10.0, capabilities=None):
    """SteeringDeps over an in-process transport and a real sandbox."""
    return SteeringDeps(
        gateway=Gateway(Live(), transport=transport),
        sandbox=Sandbox(limits=SandboxLimits(timeout_s=timeout_s)),
        assets=_ASSETS,
        model_id="fake-model",
        capabilities=capabilities or ModelCapabilities(),
    )

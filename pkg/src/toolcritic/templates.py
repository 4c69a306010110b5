"""Prompt templates for judging, critique, editing and system-message assembly.

Slots use single-brace tokens (``{chat_history}``); :func:`fill` replaces only
the names it is given in one pass, so payload text containing braces or other
slot-looking tokens is never re-expanded. The literal ``{your_choice}`` style
markers in the output-format sections are part of the prompt text itself.
"""

from __future__ import annotations

import re

EVALUATION_CRITERIA = """\
- Available tools must be fully and appropriately leveraged to meet the requirements.
- Tool call names must be valid, correct, and complete.
- Tool call arguments must be valid, correct, and complete.
- Fabrication, including the creation of information or knowledge not provided by the user, conflicting with user input, or not derived from the tools, must be penalized.
- Repetitive or unnecessary tool calls must be penalized.
- Excessive or unnecessary requests for user clarification beyond what is essential must be penalized."""

_PAIRWISE_TASK = """\
<task>
You are an expert evaluator of AI assistant performance. Given a complete user-assistant conversation history and two generated assistant responses, you are to conduct a thorough, fact-based, and comprehensive comparison. Based on specific evidence from your evaluation, make a clear choice of which response is superior. There may be a list of tools available to the assistant. The assistant starts with one or more cycles of (thinking about which tool to use -> performing tool call -> waiting for tool response), and ends with (thinking about the answer -> answer of the question). The thinking processes, tool calls, tool responses, and answer are enclosed within their tags. There could be multiple thinking processes, tool calls, tool call parameters and tool response parameters.
</task>

<evaluation_criteria>
{criteria}
</evaluation_criteria>

<conversation_history>
{chat_history}
</conversation_history>

<current_response_1>
{assistant_response_1}
</current_response_1>

<current_response_2>
{assistant_response_2}
</current_response_2>
"""

PAIRWISE_THINK_TEMPLATE = (
    _PAIRWISE_TASK.replace("{criteria}", EVALUATION_CRITERIA)
    + """
Output your choice (either '1' or '2') within <choice></choice> XML tags. No explanations should precede or follow the choice. Answer in the following format.

<choice>
{your_choice}
</choice>"""
)

PAIRWISE_NO_THINK_TEMPLATE = (
    _PAIRWISE_TASK.replace("{criteria}", EVALUATION_CRITERIA)
    + """
Output your evaluation within <evaluation></evaluation> XML tags, and then enclose your choice (either '1' or '2') within <choice></choice> XML tags. Answer in the following format.
<evaluation>
{your_evaluation}
</evaluation>
<choice>
{your_choice}
</choice>"""
)

_BON_HEADER = """\
<task>
You are an expert evaluator of AI assistant performance. Given a complete user-assistant conversation history and {N} generated assistant responses, you are to conduct a thorough, fact-based, and comprehensive comparison. Based on specific evidence from your evaluation, make a clear choice of which response is superior. If multiple responses are identical and equally the best, select the one with the smallest number.
</task>

<evaluation_criteria>
{criteria}
</evaluation_criteria>

<conversation_history>
{chat_history}
</conversation_history>
""".replace(
    "{criteria}", EVALUATION_CRITERIA
)

_BON_FOOTER = """
Output your choice (a number between 1 and {N}) within <choice></choice> XML tags. No explanations should precede or follow the choice. Answer in the following format.
<choice>
{your_choice}
</choice>"""

CRITIC_TEMPLATE = """\
<task>
You are an expert evaluator of AI assistant performance. Given a complete user-assistant conversation history and a generated assistant response, you are to conduct a thorough, fact-based, and comprehensive evaluation. Based on specific evidence from your evaluation, provide a concise critique on how the current assistant response should be revised. If the response is entirely correct and requires no changes, output '[correct]' as your critique.
</task>

<evaluation_criteria>
{criteria}
</evaluation_criteria>

<conversation_history>
{chat_history}
</conversation_history>

<current_response>
{assistant_response}
</current_response>

Output your final critique within <critique></critique> XML tags. No explanations should precede or follow the critique. Answer in the following format.
<critique>
{your_critique}
</critique>""".replace(
    "{criteria}", EVALUATION_CRITERIA
)

EDITOR_TEMPLATE = """\
<task>
You are an expert editor of AI assistant response. Given a complete user-assistant conversation history, a generated assistant response, and a critique about how to improve it, your task is to produce the revised response.
</task>

<conversation_history>
{chat_history}
</conversation_history>

<current_response>
{assistant_response}
</current_response>

<critique>
{critique}
</critique>

Output the revised response within <revised_response></revised_response> XML tags. No explanations should precede or follow the response. Answer in the following format.
<revised_response>
{revised_response}
</revised_response>"""

SYSTEM_TEMPLATE = """\
# Tools
You may call one or more functions to assist with the user query.
You are provided with function signatures within <tools></tools> XML tags:
<tools>
{tool_descs}
</tools>

For each function call, return a json object with function name and arguments within <tool_call></tool_call> XML tags:
<tool_call>
{"name": <function-name>, "arguments": <args-json-object>}
</tool_call>"""

SYSTEM_POLICY_SECTION = """

# Agent Policy
{agent_policy}"""


def fill(template: str, **slots: str) -> str:
    """Replace the given single-brace slots in one pass, leaving everything
    else (including brace-bearing payload text) untouched."""
    if not slots:
        return template
    pattern = re.compile(r"\{(" + "|".join(re.escape(k) for k in slots) + r")\}")
    return pattern.sub(lambda m: slots[m.group(1)], template)


def bon_template(n: int) -> str:
    """Best-of-N judge template with numbered response slots for the given N."""
    if n < 1:
        raise ValueError("need at least one candidate response")
    blocks = "\n".join(
        f"\n<current_response_{i}>\n{{assistant_response_{i}}}\n</current_response_{i}>"
        for i in range(1, n + 1)
    )
    return _BON_HEADER.replace("{N}", str(n)) + blocks + "\n" + _BON_FOOTER.replace("{N}", str(n))

from typing import Dict, Tuple

EMOTIONS: Tuple[str, ...] = ("happy", "neutral", "sad", "angry", "surprise", "disgust", "fear")
GROUP_EMOTIONS: Tuple[str, ...] = ("positive", "neutral", "negative")

# valence of each basic emotion
VALENCE: Dict[str, str] = {
    "happy": "positive",
    "neutral": "neutral",
    "surprise": "neutral",
    "sad": "negative",
    "angry": "negative",
    "disgust": "negative",
    "fear": "negative",
}

GCS_MIN = 0.0
GCS_MAX = 3.0
NUM_LEVELS = 4


def emotion_index(name: str) -> int:
    return EMOTIONS.index(name)


def group_emotion_index(name: str) -> int:
    return GROUP_EMOTIONS.index(name)

from rest_framework import serializers
from .models import TrainingRun, EpisodeRecord
from .utils.vessel_env import RewardSign
import logging

logger = logging.getLogger(__name__)

MODEL_CHOICES = ['learned', 'oracle']


# --- Experiment configuration ---

class ExperimentConfigSerializer(serializers.Serializer):
    """
    Validates one experiment config given as a flat mapping of strings.

    Keys that are not config fields are rejected; ``harness`` fills omitted
    keys from ``settings.BERTHING_DEFAULTS`` before validation.
    """
    algorithm = serializers.ChoiceField(choices=[code for code, _ in TrainingRun.ALGORITHM_CHOICES])
    case_id = serializers.ChoiceField(choices=[code for code, _ in TrainingRun.CASE_CHOICES])
    seed = serializers.IntegerField(min_value=0)
    episodes = serializers.IntegerField(min_value=0)
    time_limit = serializers.IntegerField(min_value=1)
    gamma = serializers.FloatField(min_value=0.0)
    alpha = serializers.FloatField()
    horizon = serializers.IntegerField(min_value=1)
    n_sequences = serializers.IntegerField(min_value=1)
    batch_size = serializers.IntegerField(min_value=1)
    eps = serializers.FloatField(min_value=0.0, max_value=1.0)
    lambda_bc = serializers.FloatField(min_value=0.0)
    lambda0 = serializers.FloatField(min_value=0.0)
    zeta = serializers.FloatField(min_value=0.0)
    noise_scale = serializers.FloatField(min_value=0.0)
    sign_mode = serializers.ChoiceField(choices=[mode.value for mode in RewardSign])
    model = serializers.ChoiceField(choices=MODEL_CHOICES)
    output_dir = serializers.CharField(allow_blank=True, trim_whitespace=True)
    buffer_capacity = serializers.IntegerField(min_value=1)
    model_fit_steps = serializers.IntegerField(min_value=0)
    model_alpha = serializers.FloatField()
    eval_every = serializers.IntegerField(min_value=1)
    policy_delay = serializers.IntegerField(min_value=1)
    target_noise = serializers.FloatField(min_value=0.0)
    target_clip = serializers.FloatField()

    def validate_gamma(self, value):
        if value >= 1.0:
            raise serializers.ValidationError("gamma must be below 1.")
        return value

    def validate_alpha(self, value):
        if value <= 0.0:
            raise serializers.ValidationError("alpha must be positive.")
        return value

    def validate_model_alpha(self, value):
        return self.validate_alpha(value)

    def validate_target_clip(self, value):
        if value <= 0.0:
            raise serializers.ValidationError("target_clip must be positive.")
        return value

    def validate_case_id(self, value):
        return int(value)

    def validate(self, attrs):
        unknown = sorted(set(self.initial_data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError({key: ["Unknown config key."] for key in unknown})
        return attrs


# --- Run registry ---

class EpisodeRecordSerializer(serializers.ModelSerializer):
    """Serializer for one learning-curve row."""
    class Meta:
        model = EpisodeRecord
        fields = ['episode', 'episode_return', 'test_return', 'critic_loss', 'actor_obj', 'dual',
                  'imitation_residual', 'model_loss', 'steps', 'terminated_reason']
        read_only_fields = fields


class TrainingRunSerializer(serializers.ModelSerializer):
    """Serializer for a registered training run."""
    algorithm_display = serializers.CharField(source='get_algorithm_display', read_only=True)

    class Meta:
        model = TrainingRun
        fields = ['id', 'name', 'algorithm', 'algorithm_display', 'case_id', 'seed', 'run_dir', 'episodes',
                  'max_training_return', 'test_return', 'success', 'created_at']
        read_only_fields = fields


class TrainingRunDetailSerializer(TrainingRunSerializer):
    """Adds the stored config text."""
    class Meta(TrainingRunSerializer.Meta):
        fields = TrainingRunSerializer.Meta.fields + ['config_text']
        read_only_fields = fields


class ComparisonRunSerializer(serializers.Serializer):
    run = serializers.CharField()
    algorithm = serializers.CharField()
    case_id = serializers.IntegerField()
    seed = serializers.IntegerField()
    max_training_return = serializers.CharField(allow_blank=True)
    test_return = serializers.CharField(allow_blank=True)


class ComparisonReportSerializer(serializers.Serializer):
    """
    The comparison table: per-run rows plus, per algorithm, the median (low)
    over runs of the maximum training return and of the test return.
    Values are the strings stored in the learning curves.
    """
    runs = ComparisonRunSerializer(many=True)
    columns = serializers.ListField(child=serializers.CharField())
    max_training_return = serializers.DictField(child=serializers.CharField(allow_blank=True))
    test_return = serializers.DictField(child=serializers.CharField(allow_blank=True))
    diagnostics = serializers.DictField()

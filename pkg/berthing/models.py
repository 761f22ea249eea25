from django.db import models, transaction
from django.db.models import UniqueConstraint
import logging

logger = logging.getLogger(__name__)


class TrainingRun(models.Model):
    """
    A finished training run and where its artifacts live.

    Attributes:
        name (str): Directory name of the run.
        algorithm (str): One of the five trainable algorithms.
        case_id (int): Initial condition the agent was trained on.
        seed (int): Root seed of the run.
        run_dir (str): Absolute path of the artifact directory.
        config_text (str): The serialized experiment config.
        episodes (int): Number of logged episodes.
        max_training_return (float): Best raw training-episode return.
        test_return (float): Last deterministic evaluation return.
        success (bool): Whether that evaluation ended berthed.
        created_at (datetime): When the run was registered.
    """
    ALGORITHM_CHOICES = [
        ('sgac', 'SGAC'),
        ('mpddpg_smbc', 'MP-DDPG with SM & BC'),
        ('mpddpg', 'MP-DDPG without SM & BC'),
        ('td3', 'TD3'),
        ('ddpg', 'DDPG'),
    ]
    CASE_CHOICES = [(1, 'Case 1'), (2, 'Case 2'), (3, 'Case 3')]

    name = models.CharField(max_length=255)
    algorithm = models.CharField(max_length=20, choices=ALGORITHM_CHOICES)
    case_id = models.PositiveSmallIntegerField(choices=CASE_CHOICES)
    seed = models.IntegerField()
    run_dir = models.CharField(max_length=1024, unique=True)
    config_text = models.TextField()
    episodes = models.IntegerField(default=0)
    max_training_return = models.FloatField(null=True, blank=True)
    test_return = models.FloatField(null=True, blank=True)
    success = models.BooleanField(null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['id']

    def __str__(self):
        return f"{self.name} ({self.get_algorithm_display()}, case {self.case_id}, seed {self.seed})"

    @classmethod
    def register(cls, result, success=None):
        """
        Store a finished run and one record per logged episode.

        Re-registering the same run directory replaces the earlier entry.

        Args:
            result (TrainResult): What ``harness.train`` returned.
            success (bool): Outcome of a final evaluation, if one was run.

        Returns:
            TrainingRun: The saved run.
        """
        cfg = result.config
        with transaction.atomic():
            cls.objects.filter(run_dir=str(result.run_dir)).delete()
            run = cls.objects.create(
                name=result.run_dir.name,
                algorithm=cfg.algorithm,
                case_id=cfg.case_id,
                seed=cfg.seed,
                run_dir=str(result.run_dir),
                config_text=result.config_text,
                episodes=len(result.logs),
                max_training_return=result.max_training_return,
                test_return=result.final_test_return,
                success=success,
            )
            EpisodeRecord.objects.bulk_create([
                EpisodeRecord(
                    run=run,
                    episode=log.episode,
                    episode_return=log.episode_return,
                    test_return=log.test_return,
                    critic_loss=log.critic_loss,
                    actor_obj=log.actor_obj,
                    dual=log.dual,
                    imitation_residual=log.imitation_residual,
                    model_loss=log.model_loss,
                    steps=log.steps,
                    terminated_reason=log.terminated_reason,
                )
                for log in result.logs
            ])
        logger.info(f"Registered run {run.name} with {run.episodes} episodes")
        return run


class EpisodeRecord(models.Model):
    """One row of a run's learning curve."""
    run = models.ForeignKey(TrainingRun, on_delete=models.CASCADE, related_name="episode_records")
    episode = models.IntegerField()
    episode_return = models.FloatField()
    test_return = models.FloatField(null=True, blank=True)
    critic_loss = models.FloatField(null=True, blank=True)
    actor_obj = models.FloatField(null=True, blank=True)
    dual = models.FloatField(null=True, blank=True)
    imitation_residual = models.FloatField(null=True, blank=True)
    model_loss = models.FloatField(null=True, blank=True)
    steps = models.IntegerField()
    terminated_reason = models.CharField(max_length=20)

    class Meta:
        ordering = ['run', 'episode']
        constraints = [
            UniqueConstraint(fields=['run', 'episode'], name='unique_run_episode')
        ]

    def __str__(self):
        return f"{self.run.name} episode {self.episode}"
